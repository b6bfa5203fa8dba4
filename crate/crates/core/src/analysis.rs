//! Error norms, verification studies, and artifact serialization.
//!
//! Everything here either measures the solver's output or re-derives it
//! independently:
//!
//! - [`linf_vs_one`] is the norm the convergence experiments report.
//! - [`manufactured_elliptic_study`] verifies the implicit solve against a
//!   closed-form solution across resolutions.
//! - [`rhs_oracle_compare`] re-evaluates the explicit right-hand side with a
//!   separately-coded, compensated-summation path and reports the largest
//!   disagreement.
//! - The `*_to_csv` functions render artifacts with round-trip precision so
//!   identical runs produce byte-identical files.

use std::fmt::Write as _;

use crate::config::{Discretization, SimulationConfig};
use crate::geometry::{NodeKind, PointCloud};
use crate::model::{gamma_derivatives, ModelParams};
use crate::solver::{ErrorSample, Snapshot, SolverError, StabilityLogEntry};
use crate::stencil::StencilSet;

/// Errors from analysis routines.
#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    /// Two error series can only be compared at identical times.
    #[error("comparison requires matching report times: {first} vs {second} at index {index}")]
    MismatchedTimes {
        index: usize,
        first: f64,
        second: f64,
    },
    #[error("comparison requires equally long series: {0} vs {1} samples")]
    MismatchedLengths(usize, usize),
}

/// `max |f − 1|` over inner and boundary nodes: the distance to the
/// homogeneous steady state.
///
/// `field` must cover the whole cloud (fictitious entries are ignored — they
/// duplicate their mirrors).
pub fn linf_vs_one(cloud: &PointCloud, field: &[f64]) -> f64 {
    assert_eq!(field.len(), cloud.len(), "field does not cover the cloud");
    cloud
        .nodes()
        .iter()
        .filter(|n| n.kind != NodeKind::Fictitious)
        .map(|n| (field[n.id] - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Max-norm errors of the implicit chemoattractant solve against the
/// manufactured solution `v = cos(πx) cos(πy)` (zero flux on the unit
/// square), driven by `u = (1 + 2π²) cos(πx) cos(πy)`.
#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    /// Grid nodes per side.
    pub resolutions: Vec<usize>,
    /// Grid spacing `1/(n − 1)` for each resolution.
    pub spacings: Vec<f64>,
    /// Max-norm error over inner and boundary nodes for each resolution.
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log spacing`.
    pub estimated_order: f64,
}

impl ConvergenceStudy {
    /// Renders `n,h,max_error` rows with round-trip float precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,h,max_error\n");
        for i in 0..self.resolutions.len() {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e}",
                self.resolutions[i], self.spacings[i], self.errors[i]
            );
        }
        out
    }
}

/// Runs the manufactured-solution study at the given grid resolutions with
/// the default star size and weights.
pub fn manufactured_elliptic_study(resolutions: &[usize]) -> Result<ConvergenceStudy, SolverError> {
    use crate::geometry::{add_fictitious_nodes, build_regular_grid, Rect};
    use crate::solver::EllipticSystem;
    use crate::stencil::{build_stencil_set_with_boundary, WeightScheme};

    let pi = std::f64::consts::PI;
    let mut spacings = Vec::with_capacity(resolutions.len());
    let mut errors = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let base = build_regular_grid(n, Rect::unit())?;
        let cloud = add_fictitious_nodes(&base)?;
        let stencils = build_stencil_set_with_boundary(&cloud, 8, WeightScheme::default())?;
        let system = EllipticSystem::new(&cloud, &stencils)?;
        let u: Vec<f64> = cloud
            .nodes()
            .iter()
            .map(|node| {
                (1.0 + 2.0 * pi * pi) * (pi * node.position.x).cos() * (pi * node.position.y).cos()
            })
            .collect();
        let v = system.solve(&u, &cloud)?;
        let mut max_err = 0.0f64;
        for node in cloud.nodes() {
            if node.kind == NodeKind::Fictitious {
                continue;
            }
            let exact = (pi * node.position.x).cos() * (pi * node.position.y).cos();
            max_err = max_err.max((v[node.id] - exact).abs());
        }
        spacings.push(1.0 / (n - 1) as f64);
        errors.push(max_err);
    }
    let estimated_order = regression_slope(&spacings, &errors);
    Ok(ConvergenceStudy {
        resolutions: resolutions.to_vec(),
        spacings,
        errors,
        estimated_order,
    })
}

/// Least-squares slope of `log(y)` against `log(x)`.
fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    num / den
}

/// Largest normalized disagreement between the production right-hand side
/// and an independent re-evaluation.
///
/// The oracle recomputes every derivative with compensated (Kahan) sums in a
/// different accumulation order, builds the Laplacian from the `∂xx` and
/// `∂yy` rows instead of the fused coefficients, and assembles the terms in
/// a different grouping. Disagreements are normalized by the magnitude sum
/// of the five terms, so the returned value is a pure roundoff measure —
/// `1e−12` is a comfortable bound for agreement.
pub fn rhs_oracle_compare(
    stencils: &StencilSet,
    u: &[f64],
    v: &[f64],
    params: &ModelParams,
) -> Result<f64, SolverError> {
    let mut worst = 0.0f64;
    for st in stencils.iter() {
        let produced = crate::solver::compute_rhs(st, u, v, params)?;
        let (oracle, scale) = oracle_rhs(st, u, v, params)?;
        let diff = (produced - oracle).abs() / scale;
        worst = worst.max(diff);
    }
    Ok(worst)
}

/// Independent right-hand-side evaluation; returns `(value, magnitude scale)`.
fn oracle_rhs(
    st: &crate::stencil::DerivativeStencil,
    u: &[f64],
    v: &[f64],
    params: &ModelParams,
) -> Result<(f64, f64), SolverError> {
    let j = st.center_id;
    // Compensated dot product over the neighbors, center term folded in last.
    let derive = |field: &[f64], row: &[f64], center_coeff: f64| -> f64 {
        let terms = st
            .neighbor_ids
            .iter()
            .zip(row)
            .map(|(&i, &lam)| lam * field[i])
            .chain(std::iter::once(-center_coeff * field[j]));
        kahan_sum(terms)
    };
    let dx_u = derive(u, &st.lambda[0], st.lambda0[0]);
    let dy_u = derive(u, &st.lambda[1], st.lambda0[1]);
    let lap_u = derive(u, &st.lambda[2], st.lambda0[2]) + derive(u, &st.lambda[3], st.lambda0[3]);
    let dx_v = derive(v, &st.lambda[0], st.lambda0[0]);
    let dy_v = derive(v, &st.lambda[1], st.lambda0[1]);
    let gv = gamma_derivatives(&params.gamma, v[j].max(0.0))?;
    let terms = [
        gv.g * lap_u,
        2.0 * gv.d1 * (dx_u * dx_v + dy_u * dy_v),
        u[j] * gv.d2 * (dx_v * dx_v + dy_v * dy_v),
        u[j] * gv.d1 * (v[j] - u[j]),
        params.mu * u[j] * (1.0 - u[j]),
    ];
    let scale = 1.0 + terms.iter().map(|t| t.abs()).sum::<f64>();
    Ok((kahan_sum(terms.into_iter()), scale))
}

fn kahan_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for t in terms {
        let y = t - c;
        let s = sum + y;
        c = (s - sum) - y;
        sum = s;
    }
    sum
}

/// Side-by-side decay comparison of two runs over identical report times.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub err_u_first: Vec<f64>,
    pub err_v_first: Vec<f64>,
    pub err_u_second: Vec<f64>,
    pub err_v_second: Vec<f64>,
    /// Per time: whether the first run's density error is strictly smaller.
    pub u_first_smaller: Vec<bool>,
    /// Per time: whether the first run's chemoattractant error is strictly
    /// smaller.
    pub v_first_smaller: Vec<bool>,
    /// Whether the first run is strictly closer to the homogeneous state in
    /// both fields at every shared time.
    pub first_dominates: bool,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t,err_u_first,err_v_first,err_u_second,err_v_second,u_first_smaller,v_first_smaller\n",
        );
        for i in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                self.times[i],
                self.err_u_first[i],
                self.err_v_first[i],
                self.err_u_second[i],
                self.err_v_second[i],
                self.u_first_smaller[i],
                self.v_first_smaller[i],
            );
        }
        out
    }
}

/// Builds a [`ComparisonReport`] from two error series sampled at the same
/// times (within `1e−9`).
pub fn comparison_report(
    first: &[ErrorSample],
    second: &[ErrorSample],
) -> Result<ComparisonReport, AnalysisError> {
    if first.len() != second.len() {
        return Err(AnalysisError::MismatchedLengths(first.len(), second.len()));
    }
    let mut report = ComparisonReport {
        times: Vec::new(),
        err_u_first: Vec::new(),
        err_v_first: Vec::new(),
        err_u_second: Vec::new(),
        err_v_second: Vec::new(),
        u_first_smaller: Vec::new(),
        v_first_smaller: Vec::new(),
        first_dominates: true,
    };
    for (index, (a, b)) in first.iter().zip(second).enumerate() {
        if (a.time - b.time).abs() > 1e-9 {
            return Err(AnalysisError::MismatchedTimes {
                index,
                first: a.time,
                second: b.time,
            });
        }
        let u_smaller = a.err_u < b.err_u;
        let v_smaller = a.err_v < b.err_v;
        report.times.push(a.time);
        report.err_u_first.push(a.err_u);
        report.err_v_first.push(a.err_v);
        report.err_u_second.push(b.err_u);
        report.err_v_second.push(b.err_v);
        report.u_first_smaller.push(u_smaller);
        report.v_first_smaller.push(v_smaller);
        report.first_dominates &= u_smaller && v_smaller;
    }
    Ok(report)
}

/// Renders error samples as `t,err_u,err_v` rows with round-trip precision.
pub fn errors_to_csv(samples: &[ErrorSample]) -> String {
    let mut out = String::from("t,err_u,err_v\n");
    for s in samples {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", s.time, s.err_u, s.err_v);
    }
    out
}

/// Renders one snapshot as `id,x,y,kind,u,v` rows, fictitious nodes
/// included (their rows make the ghost layer inspectable).
pub fn snapshot_to_csv(cloud: &PointCloud, snapshot: &Snapshot) -> String {
    let mut out = String::from("id,x,y,kind,u,v\n");
    for node in cloud.nodes() {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e}",
            node.id,
            node.position.x,
            node.position.y,
            node.kind,
            snapshot.u[node.id],
            snapshot.v[node.id],
        );
    }
    out
}

/// Renders one state (same layout as a snapshot) for post-mortem dumps.
pub fn state_to_csv(cloud: &PointCloud, u: &[f64], v: &[f64]) -> String {
    snapshot_to_csv(
        cloud,
        &Snapshot {
            time: 0.0,
            u: u.to_vec(),
            v: v.to_vec(),
        },
    )
}

/// Renders the stability log; an absent global bound prints as `inf`.
pub fn stability_log_to_csv(log: &[StabilityLogEntry]) -> String {
    let mut out = String::from("step,time,global_bound,non_informative,dt_exceeds\n");
    for e in log {
        let _ = writeln!(
            out,
            "{},{:.16e},{},{},{}",
            e.step,
            e.time,
            match e.global {
                Some(b) => format!("{b:.16e}"),
                None => "inf".to_string(),
            },
            e.non_informative,
            e.dt_exceeds,
        );
    }
    out
}

/// One-paragraph human-readable summary of a finished run.
pub fn run_summary(config: &SimulationConfig, artifacts: &crate::solver::RunArtifacts) -> String {
    let mut out = String::new();
    let nodes = artifacts.cloud.len();
    let ghosts = artifacts.cloud.count_kind(NodeKind::Fictitious);
    let discretization = match &config.discretization {
        Discretization::Grid(n) => format!("{n}×{n} grid"),
        Discretization::Cloud(path) => format!("cloud {}", path.display()),
    };
    let _ = writeln!(
        out,
        "{} — {} nodes ({} fictitious), Δt = {}, {} steps to t = {}",
        discretization, nodes, ghosts, config.dt, artifacts.steps_taken, artifacts.final_state.time,
    );
    for e in &artifacts.errors {
        let _ = writeln!(
            out,
            "  t = {:<8} ‖u−1‖∞ = {:.4e}   ‖v−1‖∞ = {:.4e}",
            e.time, e.err_u, e.err_v
        );
    }
    if let Some(worst) = artifacts
        .stability_log
        .iter()
        .filter_map(|e| e.global)
        .min_by(|a, b| a.partial_cmp(b).expect("bounds are never NaN"))
    {
        let _ =
            writeln!(
            out,
            "  stability monitor: tightest bound {worst:.4e}, Δt exceeded it on {} of {} checks",
            artifacts.stability_log.iter().filter(|e| e.dt_exceeds).count(),
            artifacts.stability_log.len(),
        );
    }
    let _ = writeln!(
        out,
        "  min chemoattractant seen: {:.4e}; star conditioning within [{:.2}, {:.2}]",
        artifacts.min_v_seen, artifacts.cond_range.0, artifacts.cond_range.1
    );
    out
}
