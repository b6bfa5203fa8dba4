//! Model data: motility functions, admissibility checks, initial conditions.
//!
//! Solutions relax to the homogeneous state `(u, v) = (1, 1)` when the
//! motility function and the logistic growth rate satisfy
//!
//! ```text
//! γ ∈ C³([0, ∞)),   γ ≥ 0,  γ′ ≤ 0,  γ″ ≥ 0,  γ‴ ≤ 0,
//! −2γ′(s) + s γ″(s) ≤ μ₀ < μ          for all s ≥ 0,
//! γ′(s)² / γ(s)     ≤ c_γ             for all s ≥ 0,
//! ```
//!
//! and the initial density is bounded between positive constants. The solver
//! checks these conditions up front ([`validate_hypotheses`]) so that a run
//! outside the guaranteed-convergence regime is an explicit decision rather
//! than a surprise.

use std::fmt;
use std::sync::Arc;

use crate::geometry::{NodeKind, Point, PointCloud};

/// Default upper end of the sampling interval for numeric hypothesis checks.
pub const DEFAULT_S_MAX: f64 = 50.0;
/// Default number of uniform samples for numeric hypothesis checks.
pub const DEFAULT_N_SAMPLES: usize = 100_000;

/// Errors from model construction and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    /// Motility functions are only defined for nonnegative concentrations.
    #[error("motility argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    /// The initial density must be strictly positive everywhere.
    #[error("initial density at node {node} is {value}, but must be strictly positive")]
    NonpositiveInitialDensity { node: usize, value: f64 },
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The motility-regulation function `γ` and its first three derivatives.
#[derive(Clone)]
pub enum MotilityFunction {
    /// `γ(s) = e^(−s)`.
    Gamma1,
    /// `γ(s) = (1 + s)^(−2)`.
    Gamma2,
    /// A user-supplied motility with explicit derivatives. The closures are
    /// trusted to be mutually consistent; [`validate_hypotheses`] checks the
    /// admissibility conditions by sampling.
    Custom {
        name: String,
        gamma: ScalarFn,
        d1: ScalarFn,
        d2: ScalarFn,
        d3: ScalarFn,
    },
}

impl MotilityFunction {
    pub fn name(&self) -> &str {
        match self {
            MotilityFunction::Gamma1 => "exp(-s)",
            MotilityFunction::Gamma2 => "(1+s)^-2",
            MotilityFunction::Custom { name, .. } => name,
        }
    }
}

// Hand-written because closures are not `Debug`.
impl fmt::Debug for MotilityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("MotilityFunction")
            .field(&self.name())
            .finish()
    }
}

/// `γ` and its first three derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaValues {
    pub g: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Evaluates `γ, γ′, γ″, γ‴` at `s ≥ 0`.
pub fn gamma_derivatives(gamma: &MotilityFunction, s: f64) -> Result<GammaValues, ModelError> {
    if s.is_nan() || s < 0.0 {
        return Err(ModelError::NegativeArgument(s));
    }
    Ok(match gamma {
        MotilityFunction::Gamma1 => {
            let e = (-s).exp();
            GammaValues {
                g: e,
                d1: -e,
                d2: e,
                d3: -e,
            }
        }
        MotilityFunction::Gamma2 => {
            let r = 1.0 / (1.0 + s);
            let r2 = r * r;
            GammaValues {
                g: r2,
                d1: -2.0 * r2 * r,
                d2: 6.0 * r2 * r2,
                d3: -24.0 * r2 * r2 * r,
            }
        }
        MotilityFunction::Custom {
            gamma, d1, d2, d3, ..
        } => GammaValues {
            g: gamma(s),
            d1: d1(s),
            d2: d2(s),
            d3: d3(s),
        },
    })
}

/// Growth rate and motility of one model instance.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub mu: f64,
    pub gamma: MotilityFunction,
}

impl ModelParams {
    pub fn new(mu: f64, gamma: MotilityFunction) -> Result<Self, ModelError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "growth rate must be positive and finite, got {mu}"
            )));
        }
        Ok(Self { mu, gamma })
    }
}

/// Outcome of checking the admissibility conditions for one model.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub gamma_name: String,
    pub mu: f64,
    /// Supremum of `−2γ′(s) + s γ″(s)` over `s ≥ 0`; convergence to the
    /// homogeneous state is guaranteed for `μ` strictly above this.
    pub mu0: f64,
    /// Supremum of `γ′(s)²/γ(s)` over `s ≥ 0`.
    pub c_gamma: f64,
    /// Whether `γ ≥ 0, γ′ ≤ 0, γ″ ≥ 0, γ‴ ≤ 0` held at every checked point.
    pub sign_chain_ok: bool,
    /// All conditions met: sign chain, `μ > μ₀`, finite `c_γ`.
    pub passes: bool,
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "motility γ = {}", self.gamma_name)?;
        writeln!(
            f,
            "  sign conditions (γ ≥ 0, γ′ ≤ 0, γ″ ≥ 0, γ‴ ≤ 0): {}",
            if self.sign_chain_ok { "ok" } else { "VIOLATED" }
        )?;
        writeln!(
            f,
            "  μ₀ = sup(−2γ′ + sγ″) = {:.6}   (need μ > μ₀; μ = {})",
            self.mu0, self.mu
        )?;
        writeln!(f, "  c_γ = sup(γ′²/γ) = {:.6}", self.c_gamma)?;
        write!(
            f,
            "  verdict: {}",
            if self.passes {
                "admissible — convergence to (1, 1) is guaranteed"
            } else {
                "NOT admissible — convergence is not guaranteed"
            }
        )
    }
}

/// Checks the admissibility conditions for `params`.
///
/// The built-in motilities have closed-form suprema (both expressions are
/// decreasing on `[0, ∞)`, so each supremum sits at `s = 0`):
///
/// - `γ = e^(−s)`: `−2γ′ + sγ″ = (2 + s)e^(−s)` → `μ₀ = 2`; `γ′²/γ = e^(−s)`
///   → `c_γ = 1`.
/// - `γ = (1+s)^(−2)`: `−2γ′ + sγ″ = (4 + 10s)(1+s)^(−4)` → `μ₀ = 4`;
///   `γ′²/γ = 4(1+s)^(−4)` → `c_γ = 4`.
///
/// Custom motilities are sampled on `[0, s_max]`: `n_samples` uniform points
/// plus a logarithmic refinement near zero, where these suprema typically
/// live.
pub fn validate_hypotheses(
    params: &ModelParams,
    s_max: f64,
    n_samples: usize,
) -> Result<HypothesisReport, ModelError> {
    if s_max.is_nan() || s_max <= 0.0 || n_samples < 2 {
        return Err(ModelError::InvalidParameter(format!(
            "hypothesis sampling needs s_max > 0 and at least 2 samples, \
             got s_max = {s_max}, n_samples = {n_samples}"
        )));
    }
    let (mu0, c_gamma, sign_chain_ok) = match &params.gamma {
        MotilityFunction::Gamma1 => (2.0, 1.0, true),
        MotilityFunction::Gamma2 => (4.0, 4.0, true),
        custom => {
            let mut mu0 = f64::NEG_INFINITY;
            let mut c_gamma = f64::NEG_INFINITY;
            let mut signs_ok = true;
            for s in sample_points(s_max, n_samples) {
                let gv = gamma_derivatives(custom, s)?;
                signs_ok &= gv.g >= 0.0 && gv.d1 <= 0.0 && gv.d2 >= 0.0 && gv.d3 <= 0.0;
                mu0 = mu0.max(-2.0 * gv.d1 + s * gv.d2);
                c_gamma = c_gamma.max(if gv.g > 0.0 {
                    gv.d1 * gv.d1 / gv.g
                } else {
                    f64::INFINITY
                });
            }
            (mu0, c_gamma, signs_ok)
        }
    };
    let passes = sign_chain_ok && params.mu > mu0 && c_gamma.is_finite();
    Ok(HypothesisReport {
        gamma_name: params.gamma.name().to_string(),
        mu: params.mu,
        mu0,
        c_gamma,
        sign_chain_ok,
        passes,
    })
}

/// `n` uniform samples of `[0, s_max]` plus a logarithmic sweep near zero.
fn sample_points(s_max: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = s_max / (n - 1) as f64;
    let uniform = (0..n).map(move |i| (i as f64 * step).min(s_max));
    let near_zero = (1..=60).map(|k| 10f64.powf(-12.0 + 0.2 * k as f64));
    uniform.chain(near_zero)
}

/// Built-in initial bacterial densities. All are defined over the unit
/// square and evaluated pointwise at node coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// Smooth bump on the disc of radius `1/2` around `(1/2, 1/2)`:
    /// `a + b·exp(−1/(1/4 − r²))` for `r < 1/2` and `a` outside, where `r`
    /// is the distance to the center. Requires `a, b > 0`.
    Bump { a: f64, b: f64 },
    /// `6 + 5 cos(πx)`: bounded away from zero, varying only in `x`.
    Cosine,
    /// `1 + 50 cos(πy) e^(−1/(x(1−x)))` for `0 < x < 1`, and `1` on the
    /// lateral edges: a sharper, sign-varying perturbation of the
    /// homogeneous state.
    Mixed,
}

impl InitialCondition {
    /// Evaluates the initial density at `p`.
    pub fn eval(&self, p: Point) -> f64 {
        match *self {
            InitialCondition::Bump { a, b } => {
                let r2 = p.dist2(Point { x: 0.5, y: 0.5 });
                if r2 < 0.25 {
                    a + b * (-1.0 / (0.25 - r2)).exp()
                } else {
                    a
                }
            }
            InitialCondition::Cosine => 6.0 + 5.0 * (std::f64::consts::PI * p.x).cos(),
            InitialCondition::Mixed => {
                if p.x > 0.0 && p.x < 1.0 {
                    let envelope = (-1.0 / (p.x * (1.0 - p.x))).exp();
                    1.0 + 50.0 * (std::f64::consts::PI * p.y).cos() * envelope
                } else {
                    1.0
                }
            }
        }
    }
}

/// Evaluates `ic` at every node of `cloud`, filling fictitious nodes from
/// their mirrors and rejecting nonpositive densities.
pub fn eval_initial(ic: &InitialCondition, cloud: &PointCloud) -> Result<Vec<f64>, ModelError> {
    let mut u = vec![0.0; cloud.len()];
    for node in cloud.nodes() {
        if node.kind == NodeKind::Fictitious {
            continue;
        }
        let value = ic.eval(node.position);
        if value.is_nan() || value <= 0.0 {
            return Err(ModelError::NonpositiveInitialDensity {
                node: node.id,
                value,
            });
        }
        u[node.id] = value;
    }
    for node in cloud.nodes() {
        if node.kind == NodeKind::Fictitious {
            let mirror = node.mirror_id.expect("fictitious nodes carry a mirror id");
            u[node.id] = u[mirror];
        }
    }
    Ok(u)
}
