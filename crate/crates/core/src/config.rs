//! Run configuration: TOML schema, validation, and built-in presets.
//!
//! A configuration file is a flat TOML table:
//!
//! ```toml
//! preset = "example1"        # optional starting point; keys below override it
//! grid = 19                  # or: cloud = "clouds/irregular-361.txt"
//! dt = 0.001
//! t_final = 10.0
//! report_times = [0.05, 1.0, 2.5, 5.0, 10.0]
//! snapshot_times = []        # full-field dumps, optional
//! gamma = "gamma1"           # "gamma1" = e^(−s), "gamma2" = (1+s)^(−2)
//! mu = 3.0
//! initial = { kind = "bump", a = 0.1, b = 5.0 }   # or "cosine" / "mixed"
//! star_size = 8
//! weight_power = 1.0
//! stability = "warn"         # "off" | "warn" | "strict"
//! stability_cadence = 100
//! output_dir = "out"
//! allow_failed_hypotheses = false
//! seed = 0                   # reserved for cloud perturbation utilities
//! ```
//!
//! Unknown keys are rejected by name. Every report and snapshot time must be
//! a whole number of steps, so recorded times are exact.

use std::path::PathBuf;

use serde::Deserialize;

use crate::model::{InitialCondition, MotilityFunction};

/// Errors from configuration parsing and validation.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config is not valid UTF-8: {0}")]
    Utf8(#[from] std::str::Utf8Error),
    /// TOML syntax errors and unknown keys (named in the message).
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(
        "unknown preset '{0}'; available presets: example1, example2, \
         example3-gamma1, example3-gamma2, irregular"
    )]
    UnknownPreset(String),
    #[error("missing required key '{0}'")]
    MissingKey(&'static str),
    #[error("invalid value for '{key}': {reason}")]
    Invalid { key: &'static str, reason: String },
}

/// Spatial discretization source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Discretization {
    /// Regular `n × n` grid on the unit square.
    Grid(usize),
    /// Cloud file path (see the geometry module for the format).
    Cloud(PathBuf),
}

/// Built-in motility selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaChoice {
    /// `γ(s) = e^(−s)`.
    Gamma1,
    /// `γ(s) = (1 + s)^(−2)`.
    Gamma2,
}

impl GammaChoice {
    pub fn motility(self) -> MotilityFunction {
        match self {
            GammaChoice::Gamma1 => MotilityFunction::Gamma1,
            GammaChoice::Gamma2 => MotilityFunction::Gamma2,
        }
    }
}

/// What the time-step stability monitor does with its findings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilityMode {
    /// Do not evaluate the monitor.
    Off,
    /// Evaluate and log; never interrupt the run.
    Warn,
    /// Abort the run when `Δt` exceeds the monitored bound.
    Strict,
}

/// A fully validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub discretization: Discretization,
    pub star_size: usize,
    pub weight_power: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Times at which to record `‖u−1‖∞` and `‖v−1‖∞` (strictly increasing,
    /// whole steps).
    pub report_times: Vec<f64>,
    /// Times at which to dump both full fields.
    pub snapshot_times: Vec<f64>,
    pub gamma: GammaChoice,
    pub mu: f64,
    pub initial: InitialCondition,
    pub stability: StabilityMode,
    /// Evaluate the monitor every this-many steps (counting from step 0).
    pub stability_cadence: usize,
    pub output_dir: PathBuf,
    /// Run even when the admissibility check fails (exploration mode).
    pub allow_failed_hypotheses: bool,
    /// Reserved for cloud perturbation utilities; the solver itself is
    /// deterministic and ignores it.
    pub seed: u64,
}

/// The TOML shape: everything optional so presets and user files merge.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<String>,
    pub grid: Option<usize>,
    pub cloud: Option<PathBuf>,
    pub star_size: Option<usize>,
    pub weight_power: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub report_times: Option<Vec<f64>>,
    pub snapshot_times: Option<Vec<f64>>,
    pub gamma: Option<String>,
    pub mu: Option<f64>,
    pub initial: Option<RawInitial>,
    pub stability: Option<String>,
    pub stability_cadence: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub allow_failed_hypotheses: Option<bool>,
    pub seed: Option<u64>,
}

/// Initial-condition table: `{ kind = "bump", a = …, b = … }`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInitial {
    pub kind: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

/// Overlays `over` on `base`: any key set in `over` wins.
pub fn merge(base: RawConfig, over: RawConfig) -> RawConfig {
    RawConfig {
        preset: over.preset.or(base.preset),
        grid: over.grid.or(base.grid),
        cloud: over.cloud.or(base.cloud),
        star_size: over.star_size.or(base.star_size),
        weight_power: over.weight_power.or(base.weight_power),
        dt: over.dt.or(base.dt),
        t_final: over.t_final.or(base.t_final),
        report_times: over.report_times.or(base.report_times),
        snapshot_times: over.snapshot_times.or(base.snapshot_times),
        gamma: over.gamma.or(base.gamma),
        mu: over.mu.or(base.mu),
        initial: over.initial.or(base.initial),
        stability: over.stability.or(base.stability),
        stability_cadence: over.stability_cadence.or(base.stability_cadence),
        output_dir: over.output_dir.or(base.output_dir),
        allow_failed_hypotheses: over
            .allow_failed_hypotheses
            .or(base.allow_failed_hypotheses),
        seed: over.seed.or(base.seed),
    }
}

/// The raw key set of a named preset.
pub fn preset_raw(name: &str) -> Result<RawConfig, ConfigError> {
    let (gamma, mu, t_final, report_times, initial, cloud): (
        &str,
        f64,
        f64,
        Vec<f64>,
        RawInitial,
        Option<PathBuf>,
    ) = match name {
        // Bump of bacteria released at the center of an empty dish.
        "example1" => (
            "gamma1",
            3.0,
            10.0,
            vec![0.05, 1.0, 2.5, 5.0, 10.0],
            RawInitial {
                kind: "bump".into(),
                a: Some(0.1),
                b: Some(5.0),
            },
            None,
        ),
        // Large cosine excursion with the rational motility.
        "example2" => (
            "gamma2",
            5.0,
            10.0,
            vec![0.05, 1.0, 2.5, 5.0, 10.0],
            RawInitial {
                kind: "cosine".into(),
                a: None,
                b: None,
            },
            None,
        ),
        // Sharp mixed perturbation; same initial state under each motility,
        // matched growth rate, for decay-rate comparison.
        "example3-gamma1" | "example3-gamma2" => (
            if name == "example3-gamma1" {
                "gamma1"
            } else {
                "gamma2"
            },
            5.0,
            2.5,
            vec![0.05, 0.1, 0.25, 0.5, 1.0, 2.5],
            RawInitial {
                kind: "mixed".into(),
                a: None,
                b: None,
            },
            None,
        ),
        // The first experiment again, but on a jittered node cloud.
        "irregular" => (
            "gamma1",
            3.0,
            10.0,
            vec![0.05, 1.0, 2.5, 5.0, 10.0],
            RawInitial {
                kind: "bump".into(),
                a: Some(0.1),
                b: Some(5.0),
            },
            Some(PathBuf::from("clouds/irregular-361.txt")),
        ),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    Ok(RawConfig {
        preset: None,
        grid: if cloud.is_none() { Some(19) } else { None },
        cloud,
        dt: Some(1e-3),
        t_final: Some(t_final),
        report_times: Some(report_times),
        gamma: Some(gamma.to_string()),
        mu: Some(mu),
        initial: Some(initial),
        ..RawConfig::default()
    })
}

/// Finalized configuration of a named preset.
pub fn preset_config(name: &str) -> Result<SimulationConfig, ConfigError> {
    finalize(preset_raw(name)?)
}

/// Parses TOML bytes into the raw (all-optional) key set, without resolving
/// a `preset` key or validating anything. Callers that layer several sources
/// (preset, file, command line) merge raw configurations and then
/// [`finalize`] the result.
pub fn parse_raw(bytes: &[u8]) -> Result<RawConfig, ConfigError> {
    let text = std::str::from_utf8(bytes)?;
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Parses TOML bytes into a validated configuration, resolving a `preset`
/// key if present (explicit keys override the preset's values).
pub fn parse_config(bytes: &[u8]) -> Result<SimulationConfig, ConfigError> {
    let raw = parse_raw(bytes)?;
    let raw = match &raw.preset {
        Some(name) => merge(preset_raw(name)?, raw),
        None => raw,
    };
    finalize(raw)
}

/// Applies defaults and validates every field.
pub fn finalize(raw: RawConfig) -> Result<SimulationConfig, ConfigError> {
    let discretization = match (raw.grid, raw.cloud) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid {
                key: "grid",
                reason: "'grid' and 'cloud' are mutually exclusive".into(),
            });
        }
        (Some(n), None) => {
            if n < 3 {
                return Err(ConfigError::Invalid {
                    key: "grid",
                    reason: format!("need at least 3 nodes per side, got {n}"),
                });
            }
            Discretization::Grid(n)
        }
        (None, Some(path)) => Discretization::Cloud(path),
        (None, None) => return Err(ConfigError::MissingKey("grid (or cloud)")),
    };

    let dt = raw.dt.ok_or(ConfigError::MissingKey("dt"))?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ConfigError::Invalid {
            key: "dt",
            reason: format!("must be positive and finite, got {dt}"),
        });
    }
    let t_final = raw.t_final.ok_or(ConfigError::MissingKey("t_final"))?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(ConfigError::Invalid {
            key: "t_final",
            reason: format!("must be positive and finite, got {t_final}"),
        });
    }
    check_step_multiple("t_final", t_final, dt)?;

    let report_times = raw.report_times.unwrap_or_default();
    check_times("report_times", &report_times, dt, t_final)?;
    let snapshot_times = raw.snapshot_times.unwrap_or_default();
    check_times("snapshot_times", &snapshot_times, dt, t_final)?;

    let gamma = match raw.gamma.as_deref() {
        Some("gamma1") => GammaChoice::Gamma1,
        Some("gamma2") => GammaChoice::Gamma2,
        Some(other) => {
            return Err(ConfigError::Invalid {
                key: "gamma",
                reason: format!("expected \"gamma1\" or \"gamma2\", got \"{other}\""),
            });
        }
        None => return Err(ConfigError::MissingKey("gamma")),
    };

    let mu = raw.mu.ok_or(ConfigError::MissingKey("mu"))?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(ConfigError::Invalid {
            key: "mu",
            reason: format!("must be positive and finite, got {mu}"),
        });
    }

    let initial = finalize_initial(raw.initial.ok_or(ConfigError::MissingKey("initial"))?)?;

    let star_size = raw.star_size.unwrap_or(8);
    if star_size < 5 {
        return Err(ConfigError::Invalid {
            key: "star_size",
            reason: format!("at least 5 neighbors are needed, got {star_size}"),
        });
    }
    let weight_power = raw.weight_power.unwrap_or(1.0);
    if !(weight_power > 0.0 && weight_power.is_finite()) {
        return Err(ConfigError::Invalid {
            key: "weight_power",
            reason: format!("must be positive and finite, got {weight_power}"),
        });
    }

    let stability = match raw.stability.as_deref() {
        None | Some("warn") => StabilityMode::Warn,
        Some("off") => StabilityMode::Off,
        Some("strict") => StabilityMode::Strict,
        Some(other) => {
            return Err(ConfigError::Invalid {
                key: "stability",
                reason: format!("expected \"off\", \"warn\" or \"strict\", got \"{other}\""),
            });
        }
    };
    let stability_cadence = raw.stability_cadence.unwrap_or(100);
    if stability_cadence == 0 {
        return Err(ConfigError::Invalid {
            key: "stability_cadence",
            reason: "must be at least 1".into(),
        });
    }

    Ok(SimulationConfig {
        discretization,
        star_size,
        weight_power,
        dt,
        t_final,
        report_times,
        snapshot_times,
        gamma,
        mu,
        initial,
        stability,
        stability_cadence,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        allow_failed_hypotheses: raw.allow_failed_hypotheses.unwrap_or(false),
        seed: raw.seed.unwrap_or(0),
    })
}

fn finalize_initial(raw: RawInitial) -> Result<InitialCondition, ConfigError> {
    match raw.kind.as_str() {
        "bump" => {
            let a = raw.a.ok_or(ConfigError::MissingKey("initial.a"))?;
            let b = raw.b.ok_or(ConfigError::MissingKey("initial.b"))?;
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(ConfigError::Invalid {
                    key: "initial",
                    reason: format!("bump parameters must be positive, got a = {a}, b = {b}"),
                });
            }
            Ok(InitialCondition::Bump { a, b })
        }
        "cosine" | "mixed" => {
            if raw.a.is_some() || raw.b.is_some() {
                return Err(ConfigError::Invalid {
                    key: "initial",
                    reason: format!("'{}' takes no parameters", raw.kind),
                });
            }
            Ok(if raw.kind == "cosine" {
                InitialCondition::Cosine
            } else {
                InitialCondition::Mixed
            })
        }
        other => Err(ConfigError::Invalid {
            key: "initial",
            reason: format!("unknown kind \"{other}\"; expected \"bump\", \"cosine\" or \"mixed\""),
        }),
    }
}

/// Enforces that `times` is strictly increasing, within `[0, t_final]`, and
/// that every entry is a whole number of steps.
fn check_times(key: &'static str, times: &[f64], dt: f64, t_final: f64) -> Result<(), ConfigError> {
    for (i, &t) in times.iter().enumerate() {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(ConfigError::Invalid {
                key,
                reason: format!("time {t} is not a finite nonnegative value"),
            });
        }
        if t > t_final {
            return Err(ConfigError::Invalid {
                key,
                reason: format!("time {t} lies beyond t_final = {t_final}"),
            });
        }
        if i > 0 && times[i - 1] >= t {
            return Err(ConfigError::Invalid {
                key,
                reason: format!(
                    "times must be strictly increasing, got {} before {t}",
                    times[i - 1]
                ),
            });
        }
        check_step_multiple(key, t, dt)?;
    }
    Ok(())
}

/// `t` must equal a whole number of steps within an absolute `1e−9`.
fn check_step_multiple(key: &'static str, t: f64, dt: f64) -> Result<(), ConfigError> {
    let steps = (t / dt).round();
    if (t - steps * dt).abs() > 1e-9 {
        return Err(ConfigError::Invalid {
            key,
            reason: format!("{t} is not a whole number of steps of dt = {dt}"),
        });
    }
    Ok(())
}
