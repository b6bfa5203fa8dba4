//! Runtime monitor for the explicit time-step size.
//!
//! Freezing the coefficients of the explicit density update at the current
//! state and bounding the amplification of a perturbation `ε` over one step
//! yields, per star, a sufficient condition of the form
//!
//! ```text
//! Δt · [ K·(A₁′ + A₁″) + B₁ ] ≤ 2 + |λ₀| + Σᵢ|λᵢ|,
//! K = |1 − λ₀| + Σᵢ|λᵢ|        (λ are the Laplacian coefficients),
//! ```
//!
//! where `A₁′` collects the signed reaction/advection coefficients of the
//! center value, `A₁″` the magnitudes of the diffusion couplings, and `B₁`
//! the state-gradient forcing. The Taylor identity `λ₀ᵣ = Σᵢ λᵢᵣ` is used
//! throughout to collapse neighbor sums into center coefficients.
//!
//! The right-hand side is positive, so whenever the bracket is nonpositive
//! the star imposes no restriction ("non-informative"); the global bound is
//! the minimum over the informative stars. The bound is sufficient, not
//! sharp: practical runs routinely remain stable above it, which is why the
//! monitor warns by default instead of aborting.

use crate::model::{gamma_derivatives, ModelParams};
use crate::stencil::{DerivativeOp, StencilSet};

use super::SolverError;

/// Time-step restriction derived from one star.
#[derive(Clone, Copy, Debug)]
pub struct StarBound {
    pub center_id: usize,
    /// Signed center-coefficient sum `A₁′`.
    pub a1p: f64,
    /// Magnitude sum `A₁″` of the diffusion couplings.
    pub a1pp: f64,
    /// State-gradient forcing `B₁`.
    pub b1: f64,
    /// Largest stable step this star certifies; `+∞` when non-informative.
    pub dt_max: f64,
}

/// Aggregate stability information for one state.
#[derive(Clone, Debug)]
pub struct StabilityBound {
    pub per_star: Vec<StarBound>,
    /// Minimum of `dt_max` over informative stars; `None` when every star is
    /// non-informative.
    pub global: Option<f64>,
    /// Number of stars that impose no restriction.
    pub non_informative: usize,
}

/// Evaluates the per-star and global time-step bounds at state `(u, v)`.
pub fn stability_bound(
    stencils: &StencilSet,
    u: &[f64],
    v: &[f64],
    params: &ModelParams,
) -> Result<StabilityBound, SolverError> {
    let mu = params.mu;
    let mut per_star = Vec::with_capacity(stencils.len());
    let mut global: Option<f64> = None;
    let mut non_informative = 0usize;

    for st in stencils.iter() {
        let j = st.center_id;
        let u0 = u[j];
        let v0 = v[j];
        let gv = gamma_derivatives(&params.gamma, v0.max(0.0))?;
        let (g1, g2, g3) = (gv.d1, gv.d2, gv.d3);

        let dx_u = st.apply(u, DerivativeOp::Dx)?;
        let dy_u = st.apply(u, DerivativeOp::Dy)?;
        let lap_u = st.apply(u, DerivativeOp::Lap)?;
        let dx_v = st.apply(v, DerivativeOp::Dx)?;
        let dy_v = st.apply(v, DerivativeOp::Dy)?;

        // Center coefficients of the first-derivative and Laplacian rows.
        let l01 = st.lambda0[0];
        let l02 = st.lambda0[1];
        let lap0 = st.lap0;
        let grad_v2 = dx_v * dx_v + dy_v * dy_v;

        let a1p = lap0 + 2.0 * g1 * (l01 * dx_v + l02 * dy_v)
            - g2 * grad_v2
            - g1 * (v0 - u0)
            - mu * (1.0 - 2.0 * u0);
        let a1pp =
            (g1 * lap0).abs() + 2.0 * (g2 * dx_v * l01).abs() + 2.0 * (g2 * dy_v * l02).abs();
        let b1 = (g1 * lap_u + 2.0 * g2 * (dx_u * dx_v + dy_u * dy_v)
            - 2.0 * g1 * (dx_u * l01 + dy_u * l02)
            + u0 * g3 * grad_v2
            - 2.0 * u0 * g2 * (dx_v * l01 + dy_v * l02)
            + u0 * g2 * (v0 - u0))
            .abs()
            + 2.0 * (g1 * dx_u * l01).abs()
            + 2.0 * (g1 * dy_u * l02).abs()
            + 2.0 * (u0 * g2 * dx_v * l01).abs()
            + 2.0 * (u0 * g2 * dy_v * l02).abs();

        let abs_lap_sum: f64 = st.lap.iter().map(|lam| lam.abs()).sum();
        let k = (1.0 - lap0).abs() + abs_lap_sum;
        let numerator = 2.0 + lap0.abs() + abs_lap_sum;
        let denominator = k * (a1p + a1pp) + b1;

        let dt_max = if denominator <= 0.0 {
            non_informative += 1;
            f64::INFINITY
        } else {
            let bound = numerator / denominator;
            global = Some(global.map_or(bound, |g: f64| g.min(bound)));
            bound
        };
        per_star.push(StarBound {
            center_id: j,
            a1p,
            a1pp,
            b1,
            dt_max,
        });
    }

    Ok(StabilityBound {
        per_star,
        global,
        non_informative,
    })
}
