//! Command implementations for the batch driver.
//!
//! The binary in `main.rs` only parses arguments; everything observable —
//! configuration layering, running, artifact writing, report printing —
//! lives here so it can be exercised directly by tests.
//!
//! Configuration sources layer in a fixed order: a built-in preset first,
//! then a TOML file, then individual command-line keys. A higher layer that
//! names a discretization (grid or cloud) replaces the lower one's entirely,
//! so `--cloud` cleanly overrides a preset's grid.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use chemogfd::analysis::{
    comparison_report, errors_to_csv, manufactured_elliptic_study, run_summary, snapshot_to_csv,
    stability_log_to_csv, state_to_csv, ComparisonReport,
};
use chemogfd::config::{
    finalize, merge, parse_raw, preset_raw, GammaChoice, RawConfig, SimulationConfig,
};
use chemogfd::geometry::{Node, NodeKind, Point, PointCloud, Rect};
use chemogfd::model::{validate_hypotheses, ModelParams, DEFAULT_N_SAMPLES, DEFAULT_S_MAX};
use chemogfd::solver::{run, RunArtifacts, SolverError};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Where the layered configuration comes from. `overrides` holds the keys
/// given directly on the command line and wins over everything.
#[derive(Debug, Default)]
pub struct ConfigSources {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub overrides: RawConfig,
}

impl ConfigSources {
    /// Merges preset, file, and command-line keys into one raw key set.
    fn merged_raw(&self) -> Result<RawConfig> {
        let mut raw = RawConfig::default();
        if let Some(name) = &self.preset {
            raw = merge(raw, preset_raw(name)?);
        }
        if let Some(path) = &self.config {
            let bytes = fs::read(path)
                .with_context(|| format!("reading configuration {}", path.display()))?;
            let mut file_raw = parse_raw(&bytes)
                .with_context(|| format!("parsing configuration {}", path.display()))?;
            if let Some(name) = file_raw.preset.take() {
                file_raw = merge(preset_raw(&name)?, file_raw);
            }
            raw = layer_discretization(raw, file_raw);
        }
        Ok(layer_discretization(raw, self.overrides.clone()))
    }

    /// Resolves and validates the full simulation configuration.
    pub fn resolve(&self) -> Result<SimulationConfig> {
        Ok(finalize(self.merged_raw()?)?)
    }
}

/// Merges `over` onto `base`, dropping the base's discretization first when
/// the overlay names its own — grid and cloud are one logical key.
fn layer_discretization(mut base: RawConfig, over: RawConfig) -> RawConfig {
    if over.grid.is_some() || over.cloud.is_some() {
        base.grid = None;
        base.cloud = None;
    }
    merge(base, over)
}

/// The partial results carried by an abort, if any.
fn partial_artifacts(err: &SolverError) -> Option<&RunArtifacts> {
    match err {
        SolverError::Divergence { artifacts, .. }
        | SolverError::StabilityAbort { artifacts, .. } => artifacts.as_deref(),
        _ => None,
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(())
}

/// Writes a run's artifacts under its configured output directory: the error
/// series, the stability-bound log, and one snapshot file per recorded time.
/// Aborted runs additionally dump the fields at the moment of failure.
pub fn write_run_artifacts(
    config: &SimulationConfig,
    artifacts: &RunArtifacts,
    aborted: bool,
) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut written = Vec::new();
    write_file(
        dir,
        "errors.csv",
        &errors_to_csv(&artifacts.errors),
        &mut written,
    )?;
    write_file(
        dir,
        "stability.csv",
        &stability_log_to_csv(&artifacts.stability_log),
        &mut written,
    )?;
    for snapshot in &artifacts.snapshots {
        write_file(
            dir,
            &format!("snapshot_t{}.csv", snapshot.time),
            &snapshot_to_csv(&artifacts.cloud, snapshot),
            &mut written,
        )?;
    }
    if aborted {
        write_file(
            dir,
            "last_state.csv",
            &state_to_csv(
                &artifacts.cloud,
                &artifacts.final_state.u,
                &artifacts.final_state.v,
            ),
            &mut written,
        )?;
    }
    Ok(written)
}

/// Runs one simulation and flushes its artifacts; on abort, whatever the
/// solver produced up to the failure is flushed before the error surfaces.
fn run_and_write(config: &SimulationConfig) -> Result<RunArtifacts> {
    match run(config) {
        Ok(artifacts) => {
            write_run_artifacts(config, &artifacts, false)?;
            Ok(artifacts)
        }
        Err(err) => {
            if let Some(artifacts) = partial_artifacts(&err) {
                let written = write_run_artifacts(config, artifacts, true)?;
                for path in written {
                    eprintln!("flushed partial artifact {}", path.display());
                }
            }
            Err(anyhow::Error::new(err))
                .with_context(|| format!("run aborted ({})", config.output_dir.display()))
        }
    }
}

/// `run`: one simulation, artifacts under the output directory, summary on
/// stdout.
pub fn cmd_run(config: &SimulationConfig) -> Result<()> {
    let artifacts = run_and_write(config)?;
    print!("{}", run_summary(config, &artifacts));
    println!("artifacts written to {}", config.output_dir.display());
    Ok(())
}

/// `study`: the manufactured-solution convergence study of the implicit
/// solve, printed as a table and written as `study.csv`.
pub fn cmd_study(resolutions: &[usize], output_dir: &Path) -> Result<()> {
    let study = manufactured_elliptic_study(resolutions).context("convergence study failed")?;
    fs::create_dir_all(output_dir)
        .with_context(|| format!("creating output directory {}", output_dir.display()))?;
    let path = output_dir.join("study.csv");
    fs::write(&path, study.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    println!("  n   spacing        max error");
    for i in 0..study.resolutions.len() {
        println!(
            "{:>3}   {:.6e}   {:.6e}",
            study.resolutions[i], study.spacings[i], study.errors[i]
        );
    }
    println!("fitted order: {:.3}", study.estimated_order);
    println!("wrote {}", path.display());
    Ok(())
}

/// `compare`: runs the same configuration under both motilities and reports
/// which one reaches the homogeneous state faster.
///
/// With `--preset NAME`, the built-in pair `NAME-gamma1` / `NAME-gamma2` is
/// used when it exists; otherwise the named preset is run twice with the
/// motility forced, so the two runs differ only in γ.
pub fn cmd_compare(sources: &ConfigSources) -> Result<ComparisonReport> {
    let side = |gamma: &str| -> Result<SimulationConfig> {
        let preset = match &sources.preset {
            Some(name) => {
                let variant = format!("{name}-{gamma}");
                Some(if preset_raw(&variant).is_ok() {
                    variant
                } else {
                    name.clone()
                })
            }
            None => None,
        };
        let mut overrides = sources.overrides.clone();
        overrides.gamma = Some(gamma.to_string());
        ConfigSources {
            preset,
            config: sources.config.clone(),
            overrides,
        }
        .resolve()
    };

    let mut first = side("gamma1")?;
    let mut second = side("gamma2")?;
    let root = first.output_dir.clone();
    first.output_dir = root.join("gamma1");
    second.output_dir = root.join("gamma2");

    println!("running with γ₁(v) = e^(−v) …");
    let first_artifacts = run_and_write(&first)?;
    println!("running with γ₂(v) = 1/(1+v)² …");
    let second_artifacts = run_and_write(&second)?;

    let report = comparison_report(&first_artifacts.errors, &second_artifacts.errors)?;
    fs::create_dir_all(&root)?;
    let path = root.join("comparison.csv");
    fs::write(&path, report.to_csv()).with_context(|| format!("writing {}", path.display()))?;

    println!("   t        ‖u−1‖ γ₁     ‖u−1‖ γ₂     ‖v−1‖ γ₁     ‖v−1‖ γ₂");
    for i in 0..report.times.len() {
        println!(
            "{:>7}   {:.4e}   {:.4e}   {:.4e}   {:.4e}",
            report.times[i],
            report.err_u_first[i],
            report.err_u_second[i],
            report.err_v_first[i],
            report.err_v_second[i],
        );
    }
    println!(
        "γ₁ strictly closer to the homogeneous state at every time, both fields: {}",
        report.first_dominates
    );
    println!("wrote {}", path.display());
    Ok(report)
}

/// `validate`: checks the decay hypotheses for a motility/growth pairing
/// without running anything. Only γ and μ are read from the sources, so a
/// discretization is not required.
pub fn cmd_validate(sources: &ConfigSources) -> Result<bool> {
    let raw = sources.merged_raw()?;
    let gamma = match raw.gamma.as_deref() {
        Some("gamma1") => GammaChoice::Gamma1,
        Some("gamma2") => GammaChoice::Gamma2,
        Some(other) => bail!("unknown gamma \"{other}\"; expected \"gamma1\" or \"gamma2\""),
        None => bail!("validate needs a motility: pass --gamma, a preset, or a config file"),
    };
    let Some(mu) = raw.mu else {
        bail!("validate needs a growth rate: pass --mu, a preset, or a config file");
    };
    let params = ModelParams::new(mu, gamma.motility())?;
    let report = validate_hypotheses(&params, DEFAULT_S_MAX, DEFAULT_N_SAMPLES)?;
    println!("{report}");
    Ok(report.passes)
}

/// Generates an irregular node cloud: the boundary of a regular `n × n`
/// grid kept exact, every interior node displaced by a uniform jitter of up
/// to `jitter` grid cells per axis. The same seed always yields the same
/// cloud.
pub fn generate_jittered_cloud(n: usize, jitter: f64, seed: u64) -> Result<PointCloud> {
    if !(0.0..0.5).contains(&jitter) {
        bail!("jitter must be in [0, 0.5) grid cells to keep nodes distinct, got {jitter}");
    }
    if n < 3 {
        bail!("cloud needs at least 3 nodes per side, got {n}");
    }
    let h = 1.0 / (n - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let on_boundary = i == 0 || j == 0 || i == n - 1 || j == n - 1;
            let exact = Point {
                x: if i == n - 1 { 1.0 } else { i as f64 * h },
                y: if j == n - 1 { 1.0 } else { j as f64 * h },
            };
            let position = if on_boundary {
                exact
            } else {
                Point {
                    x: exact.x + rng.gen_range(-jitter..=jitter) * h,
                    y: exact.y + rng.gen_range(-jitter..=jitter) * h,
                }
            };
            nodes.push(Node {
                id: nodes.len(),
                position,
                kind: if on_boundary {
                    NodeKind::Boundary
                } else {
                    NodeKind::Inner
                },
                mirror_id: None,
            });
        }
    }
    Ok(PointCloud::new(nodes, Rect::unit())?)
}
