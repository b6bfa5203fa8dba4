//! Explicit update of the bacterial density.
//!
//! The density equation `∂u/∂t = Δ(γ(v)u) + μu(1−u)` is advanced with the
//! forward Euler rule. Expanding the diffusion of the product and replacing
//! `Δv` by `v − u` (the chemoattractant equation holds at every step) gives
//! the pointwise right-hand side
//!
//! ```text
//! γ(v)·Δu + 2γ′(v)·∇u·∇v + u·γ″(v)·|∇v|² + u·γ′(v)·(v − u) + μ·u·(1 − u),
//! ```
//!
//! evaluated per node from the derivative stencils. After the update the
//! fictitious values are re-slaved to their mirrors, keeping the zero-flux
//! condition exact for the next step.

use crate::geometry::{NodeKind, PointCloud};
use crate::model::{gamma_derivatives, ModelParams};
use crate::stencil::{DerivativeOp, DerivativeStencil, StencilSet};

use super::SolverError;

/// The spatial right-hand side of the density equation at one node.
///
/// The motility is evaluated at `max(v, 0)`: the chemoattractant is
/// provably nonnegative, but the discrete solve may undershoot zero by
/// rounding, and `γ` is only defined for nonnegative arguments.
pub fn compute_rhs(
    stencil: &DerivativeStencil,
    u: &[f64],
    v: &[f64],
    params: &ModelParams,
) -> Result<f64, SolverError> {
    let j = stencil.center_id;
    let u0 = u[j];
    let v0 = v[j];
    let gv = gamma_derivatives(&params.gamma, v0.max(0.0))?;
    let lap_u = stencil.apply(u, DerivativeOp::Lap)?;
    let dx_u = stencil.apply(u, DerivativeOp::Dx)?;
    let dy_u = stencil.apply(u, DerivativeOp::Dy)?;
    let dx_v = stencil.apply(v, DerivativeOp::Dx)?;
    let dy_v = stencil.apply(v, DerivativeOp::Dy)?;
    Ok(gv.g * lap_u
        + 2.0 * gv.d1 * (dx_u * dx_v + dy_u * dy_v)
        + u0 * gv.d2 * (dx_v * dx_v + dy_v * dy_v)
        + u0 * gv.d1 * (v0 - u0)
        + params.mu * u0 * (1.0 - u0))
}

/// Advances the density one step of size `dt`, returning the new field.
///
/// Every node with a stencil is updated explicitly; fictitious nodes then
/// copy their mirrors. A non-finite update aborts with a divergence error
/// naming the node and `step` (the index of the step being computed).
pub fn parabolic_step(
    cloud: &PointCloud,
    stencils: &StencilSet,
    u: &[f64],
    v: &[f64],
    params: &ModelParams,
    dt: f64,
    step: usize,
) -> Result<Vec<f64>, SolverError> {
    let mut next = u.to_vec();
    for stencil in stencils.iter() {
        let j = stencil.center_id;
        let rhs = compute_rhs(stencil, u, v, params)?;
        let value = u[j] + dt * rhs;
        if !value.is_finite() {
            return Err(SolverError::Divergence {
                node: j,
                step,
                time: step as f64 * dt,
                detail: format!("density update produced {value}"),
                artifacts: None,
            });
        }
        next[j] = value;
    }
    for node in cloud.nodes() {
        if node.kind == NodeKind::Fictitious {
            let mirror = node.mirror_id.expect("fictitious nodes carry a mirror id");
            next[node.id] = next[mirror];
        }
    }
    Ok(next)
}
