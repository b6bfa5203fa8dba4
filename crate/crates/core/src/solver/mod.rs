//! The coupled time loop: explicit density, implicit chemoattractant.
//!
//! One run proceeds as
//!
//! 1. build the cloud (grid or file) and its fictitious boundary layer,
//! 2. build derivative stencils for every inner and boundary node,
//! 3. check the model admissibility conditions,
//! 4. evaluate the initial density and solve for the initial
//!    chemoattractant,
//! 5. repeat: optionally evaluate the stability monitor, advance the density
//!    explicitly, re-solve the chemoattractant, record errors and snapshots
//!    at the configured times.
//!
//! Runs are bit-for-bit reproducible: all loops are sequential, the sparse
//! factorization is forced single-threaded, and reported times are computed
//! as `step · Δt` rather than accumulated.

mod elliptic;
mod stability;
mod step;

pub use elliptic::EllipticSystem;
pub use stability::{stability_bound, StabilityBound, StarBound};
pub use step::{compute_rhs, parabolic_step};

use crate::analysis::linf_vs_one;
use crate::config::{Discretization, SimulationConfig, StabilityMode};
use crate::geometry::{
    add_fictitious_nodes, build_regular_grid, load_cloud, GeometryError, NodeKind, PointCloud, Rect,
};
use crate::model::{
    eval_initial, validate_hypotheses, HypothesisReport, ModelError, ModelParams,
    DEFAULT_N_SAMPLES, DEFAULT_S_MAX,
};
use crate::stencil::{build_stencil_set_with_boundary, StencilError, StencilSet, WeightScheme};

/// Densities above this magnitude abort the run as diverged.
const DIVERGENCE_GUARD: f64 = 1e6;

/// Errors from a solver run. Divergence and stability aborts carry the
/// artifacts accumulated so far, so callers can still write diagnostics.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stencil(#[from] StencilError),
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Linear algebra failure (assembly, factorization, or residual check).
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// The model violates the convergence hypotheses and the run did not opt
    /// out of enforcement.
    #[error("model fails the admissibility conditions:\n{0}")]
    Inadmissible(String),
    #[error("solution diverged at node {node} on step {step} (t = {time}): {detail}")]
    Divergence {
        node: usize,
        step: usize,
        time: f64,
        detail: String,
        artifacts: Option<Box<RunArtifacts>>,
    },
    #[error(
        "time step {dt} exceeds the stability bound {bound:.6e} at step {step} (t = {time}); \
         rerun with a smaller step or stability mode 'warn'"
    )]
    StabilityAbort {
        dt: f64,
        bound: f64,
        step: usize,
        time: f64,
        artifacts: Option<Box<RunArtifacts>>,
    },
}

/// The two evolving fields plus the step counter.
#[derive(Clone, Debug)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub step: usize,
    pub time: f64,
}

/// Full copy of both fields at one configured time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Distance to the homogeneous state at one configured time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorSample {
    pub time: f64,
    /// `max |u − 1|` over inner and boundary nodes.
    pub err_u: f64,
    /// `max |v − 1|` over inner and boundary nodes.
    pub err_v: f64,
}

/// One evaluation of the time-step stability monitor.
#[derive(Clone, Copy, Debug)]
pub struct StabilityLogEntry {
    pub step: usize,
    pub time: f64,
    /// Global bound; `None` when every star was non-informative.
    pub global: Option<f64>,
    pub non_informative: usize,
    /// Whether the configured `Δt` exceeded the bound.
    pub dt_exceeds: bool,
}

/// Everything a run produces.
#[derive(Debug)]
pub struct RunArtifacts {
    pub errors: Vec<ErrorSample>,
    pub snapshots: Vec<Snapshot>,
    pub stability_log: Vec<StabilityLogEntry>,
    pub hypothesis: HypothesisReport,
    pub final_state: State,
    /// Smallest chemoattractant value seen at any real node; slightly
    /// negative values (≳ −1e−10) are rounding, anything lower is suspect.
    pub min_v_seen: f64,
    /// Conditioning estimates (min, max) across all stars.
    pub cond_range: (f64, f64),
    pub steps_taken: usize,
    pub cloud: PointCloud,
}

/// Executes one simulation as configured.
pub fn run(config: &SimulationConfig) -> Result<RunArtifacts, SolverError> {
    let base = match &config.discretization {
        Discretization::Grid(n) => build_regular_grid(*n, Rect::unit())?,
        Discretization::Cloud(path) => load_cloud(path)?,
    };
    let cloud = add_fictitious_nodes(&base)?;
    let scheme = WeightScheme::new(config.weight_power)?;
    let stencils = build_stencil_set_with_boundary(&cloud, config.star_size, scheme)?;
    let params = ModelParams::new(config.mu, config.gamma.motility())?;
    let hypothesis = validate_hypotheses(&params, DEFAULT_S_MAX, DEFAULT_N_SAMPLES)?;
    if !hypothesis.passes && !config.allow_failed_hypotheses {
        return Err(SolverError::Inadmissible(hypothesis.to_string()));
    }

    let elliptic = EllipticSystem::new(&cloud, &stencils)?;
    let mut u = eval_initial(&config.initial, &cloud)?;
    let mut v = elliptic.solve(&u, &cloud)?;

    let dt = config.dt;
    let n_steps = (config.t_final / dt).round() as usize;
    let report_steps: Vec<usize> = config
        .report_times
        .iter()
        .map(|t| (t / dt).round() as usize)
        .collect();
    let snapshot_steps: Vec<usize> = config
        .snapshot_times
        .iter()
        .map(|t| (t / dt).round() as usize)
        .collect();

    let mut errors: Vec<ErrorSample> = Vec::new();
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut stability_log: Vec<StabilityLogEntry> = Vec::new();
    let mut min_v_seen = min_over_real(&cloud, &v);

    record(
        &cloud,
        &u,
        &v,
        0,
        dt,
        &report_steps,
        &snapshot_steps,
        &mut errors,
        &mut snapshots,
    );

    for step in 0..n_steps {
        let time = step as f64 * dt;
        if config.stability != StabilityMode::Off && step % config.stability_cadence == 0 {
            let bound = stability_bound(&stencils, &u, &v, &params)?;
            let dt_exceeds = bound.global.is_some_and(|b| dt > b);
            stability_log.push(StabilityLogEntry {
                step,
                time,
                global: bound.global,
                non_informative: bound.non_informative,
                dt_exceeds,
            });
            if dt_exceeds && config.stability == StabilityMode::Strict {
                let artifacts = finish(
                    errors,
                    snapshots,
                    stability_log,
                    hypothesis,
                    u,
                    v,
                    step,
                    dt,
                    min_v_seen,
                    &stencils,
                    cloud,
                );
                return Err(SolverError::StabilityAbort {
                    dt,
                    bound: artifacts
                        .stability_log
                        .last()
                        .and_then(|e| e.global)
                        .unwrap_or(f64::NAN),
                    step,
                    time,
                    artifacts: Some(Box::new(artifacts)),
                });
            }
        }

        let next = match parabolic_step(&cloud, &stencils, &u, &v, &params, dt, step + 1) {
            Ok(next) => next,
            Err(SolverError::Divergence {
                node,
                step,
                time,
                detail,
                ..
            }) => {
                let artifacts = finish(
                    errors,
                    snapshots,
                    stability_log,
                    hypothesis,
                    u,
                    v,
                    step,
                    dt,
                    min_v_seen,
                    &stencils,
                    cloud,
                );
                return Err(SolverError::Divergence {
                    node,
                    step,
                    time,
                    detail,
                    artifacts: Some(Box::new(artifacts)),
                });
            }
            Err(other) => return Err(other),
        };
        u = next;

        if let Some((node, value)) = find_overflow(&cloud, &u) {
            let artifacts = finish(
                errors,
                snapshots,
                stability_log,
                hypothesis,
                u.clone(),
                v,
                step + 1,
                dt,
                min_v_seen,
                &stencils,
                cloud,
            );
            return Err(SolverError::Divergence {
                node,
                step: step + 1,
                time: (step + 1) as f64 * dt,
                detail: format!("density magnitude {value:.3e} exceeds {DIVERGENCE_GUARD:.0e}"),
                artifacts: Some(Box::new(artifacts)),
            });
        }

        v = elliptic.solve(&u, &cloud)?;
        min_v_seen = min_v_seen.min(min_over_real(&cloud, &v));

        record(
            &cloud,
            &u,
            &v,
            step + 1,
            dt,
            &report_steps,
            &snapshot_steps,
            &mut errors,
            &mut snapshots,
        );
    }

    Ok(finish(
        errors,
        snapshots,
        stability_log,
        hypothesis,
        u,
        v,
        n_steps,
        dt,
        min_v_seen,
        &stencils,
        cloud,
    ))
}

/// Records error samples and snapshots when `step` is a configured index.
#[allow(clippy::too_many_arguments)]
fn record(
    cloud: &PointCloud,
    u: &[f64],
    v: &[f64],
    step: usize,
    dt: f64,
    report_steps: &[usize],
    snapshot_steps: &[usize],
    errors: &mut Vec<ErrorSample>,
    snapshots: &mut Vec<Snapshot>,
) {
    let time = step as f64 * dt;
    if report_steps.contains(&step) {
        errors.push(ErrorSample {
            time,
            err_u: linf_vs_one(cloud, u),
            err_v: linf_vs_one(cloud, v),
        });
    }
    if snapshot_steps.contains(&step) {
        snapshots.push(Snapshot {
            time,
            u: u.to_vec(),
            v: v.to_vec(),
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    errors: Vec<ErrorSample>,
    snapshots: Vec<Snapshot>,
    stability_log: Vec<StabilityLogEntry>,
    hypothesis: HypothesisReport,
    u: Vec<f64>,
    v: Vec<f64>,
    step: usize,
    dt: f64,
    min_v_seen: f64,
    stencils: &StencilSet,
    cloud: PointCloud,
) -> RunArtifacts {
    RunArtifacts {
        errors,
        snapshots,
        stability_log,
        hypothesis,
        final_state: State {
            u,
            v,
            step,
            time: step as f64 * dt,
        },
        min_v_seen,
        cond_range: stencils.cond_range(),
        steps_taken: step,
        cloud,
    }
}

/// Minimum over inner and boundary nodes.
fn min_over_real(cloud: &PointCloud, field: &[f64]) -> f64 {
    cloud
        .nodes()
        .iter()
        .filter(|n| n.kind != NodeKind::Fictitious)
        .map(|n| field[n.id])
        .fold(f64::INFINITY, f64::min)
}

/// First real node whose density magnitude breaches the guard, if any.
fn find_overflow(cloud: &PointCloud, u: &[f64]) -> Option<(usize, f64)> {
    cloud
        .nodes()
        .iter()
        .filter(|n| n.kind != NodeKind::Fictitious)
        .map(|n| (n.id, u[n.id]))
        .find(|&(_, value)| value.abs() > DIVERGENCE_GUARD)
}
