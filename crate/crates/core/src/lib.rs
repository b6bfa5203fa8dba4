//! Meshless generalized finite difference (GFD) solver for a parabolic–elliptic
//! chemotaxis system with density-suppressed motility.
//!
//! The model couples a bacterial density `u` and a chemoattractant
//! concentration `v` on a rectangular domain with homogeneous Neumann
//! boundary conditions:
//!
//! ```text
//! ∂u/∂t = Δ(γ(v) u) + μ u (1 − u)
//!      0 = Δv − v + u
//! ```
//!
//! The motility function `γ` is positive and decreasing, so regions rich in
//! chemoattractant suppress bacterial movement. After rescaling, every
//! admissible solution relaxes to the homogeneous steady state `(u, v) = (1, 1)`.
//!
//! Space is discretized without a mesh: each node carries a *star* of `s`
//! nearby nodes, and a weighted least-squares fit of a second-order Taylor
//! expansion over that star yields per-node finite-difference formulas for
//! all five partial derivatives (`∂x`, `∂y`, `∂xx`, `∂yy`, `∂xy`). Time
//! stepping is explicit in `u` and implicit (a single sparse factorization,
//! reused every step) in `v`.
//!
//! Module map:
//!
//! - [`geometry`]: point clouds, regular grids, ghost (fictitious) nodes for
//!   the Neumann boundary, and star selection.
//! - [`stencil`]: per-star weighted least-squares derivative coefficients.
//! - [`model`]: motility functions, admissibility checks, initial conditions.
//! - [`solver`]: the coupled explicit/implicit time loop and the runtime
//!   time-step stability monitor.
//! - [`analysis`]: error norms, manufactured-solution verification, and
//!   independent re-evaluation oracles.
//! - [`config`]: run configuration, TOML parsing, and built-in presets.

pub mod analysis;
pub mod config;
pub mod geometry;
pub mod model;
pub mod solver;
pub mod stencil;
