//! Per-node derivative stencils from weighted least-squares Taylor fits.
//!
//! For a star with center `x₀` and neighbors `xᵢ = x₀ + (hᵢ, kᵢ)`, the five
//! second-order Taylor coefficients of a field `f`,
//!
//! ```text
//! d = (∂x f, ∂y f, ∂xx f, ∂yy f, ∂xy f) at x₀,
//! ```
//!
//! minimize the weighted residual `Σᵢ wᵢ² (f₀ − fᵢ + cᵢ·d)²` with the Taylor
//! row `cᵢ = (hᵢ, kᵢ, ½hᵢ², ½kᵢ², hᵢkᵢ)`. The normal equations `A d = b` have
//! `A = Σᵢ wᵢ² cᵢ cᵢᵀ`, which depends only on geometry, so `A` is factored
//! once per star and each derivative becomes a linear functional of the node
//! values:
//!
//! ```text
//! D_r f ≈ −λ₀ᵣ f₀ + Σᵢ λᵢᵣ fᵢ,   λᵢᵣ = wᵢ² (A⁻¹cᵢ)ᵣ,   λ₀ᵣ = Σᵢ λᵢᵣ.
//! ```
//!
//! The identity `λ₀ᵣ = Σᵢ λᵢᵣ` holds exactly by construction (constants have
//! zero derivatives) and the time-step stability monitor relies on it.

mod cholesky;

pub use cholesky::{Chol5, NonPositivePivot};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::geometry::{select_star, GeometryError, NodeKind, PointCloud, Star};

/// Distance weighting for the least-squares fit: `w = (h² + k²)^(−p)`.
///
/// Larger exponents localize the fit harder around the center. The default
/// `p = 1` weights each neighbor by the inverse of its squared distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightScheme {
    exponent: f64,
}

impl WeightScheme {
    /// Creates the scheme `w = dist²^(−exponent)`; the exponent must be
    /// positive.
    pub fn new(exponent: f64) -> Result<Self, StencilError> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(StencilError::InvalidParameter(format!(
                "weight exponent must be positive and finite, got {exponent}"
            )));
        }
        Ok(Self { exponent })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

impl Default for WeightScheme {
    fn default() -> Self {
        Self { exponent: 1.0 }
    }
}

/// Derivative selector for [`DerivativeStencil::apply`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeOp {
    Dx,
    Dy,
    Dxx,
    Dyy,
    Dxy,
    /// `Dxx + Dyy`, evaluated from the dedicated Laplacian coefficients.
    Lap,
}

impl DerivativeOp {
    /// Row of the coefficient table for the plain derivatives; `None` for
    /// the fused Laplacian, which has its own coefficients.
    pub fn row(self) -> Option<usize> {
        match self {
            DerivativeOp::Dx => Some(0),
            DerivativeOp::Dy => Some(1),
            DerivativeOp::Dxx => Some(2),
            DerivativeOp::Dyy => Some(3),
            DerivativeOp::Dxy => Some(4),
            DerivativeOp::Lap => None,
        }
    }
}

/// Errors from stencil construction and application.
#[derive(Debug, thiserror::Error)]
pub enum StencilError {
    #[error("invalid stencil parameter: {0}")]
    InvalidParameter(String),
    /// The star geometry cannot determine all five derivatives (for example,
    /// all neighbors collinear through the center).
    #[error(
        "degenerate star at node {center_id}: least-squares pivot {pivot} is not positive; \
         the neighbor geometry cannot determine all five derivatives"
    )]
    DegenerateStar { center_id: usize, pivot: usize },
    /// A field passed to `apply` does not cover some node of the star.
    #[error("field of length {len} has no value for node {node}")]
    MissingValue { node: usize, len: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// All derivative coefficients of one star.
///
/// `lambda[r][i]` multiplies neighbor `neighbor_ids[i]` in the formula for
/// derivative row `r` (rows: ∂x, ∂y, ∂xx, ∂yy, ∂xy); `lambda0[r]` multiplies
/// the center (with a minus sign). `lap`/`lap0` are the precomputed sums of
/// the ∂xx and ∂yy rows.
#[derive(Clone, Debug)]
pub struct DerivativeStencil {
    pub center_id: usize,
    pub neighbor_ids: Vec<usize>,
    pub lambda: [Vec<f64>; 5],
    pub lambda0: [f64; 5],
    /// Laplacian coefficient per neighbor: `lambda[2][i] + lambda[3][i]`.
    pub lap: Vec<f64>,
    /// Laplacian coefficient of the center: `lambda0[2] + lambda0[3]`.
    pub lap0: f64,
    /// Diagonal ratio of the Cholesky factor; grows as the star degenerates.
    pub cond_estimate: f64,
}

impl DerivativeStencil {
    /// Evaluates one derivative of `field` at the star center.
    ///
    /// `field` must hold a value for the center and every neighbor (it is
    /// indexed by node id).
    pub fn apply(&self, field: &[f64], op: DerivativeOp) -> Result<f64, StencilError> {
        let center = *field
            .get(self.center_id)
            .ok_or(StencilError::MissingValue {
                node: self.center_id,
                len: field.len(),
            })?;
        let (coeffs, center_coeff): (&[f64], f64) = match op.row() {
            Some(r) => (&self.lambda[r], self.lambda0[r]),
            None => (&self.lap, self.lap0),
        };
        let mut acc = -center_coeff * center;
        for (&id, &lam) in self.neighbor_ids.iter().zip(coeffs) {
            let value = *field.get(id).ok_or(StencilError::MissingValue {
                node: id,
                len: field.len(),
            })?;
            acc += lam * value;
        }
        Ok(acc)
    }
}

/// Inverse-distance weights for every neighbor of `star`.
pub fn compute_weights(star: &Star, scheme: WeightScheme) -> Vec<f64> {
    star.offsets
        .iter()
        .map(|off| {
            let d2 = off.x * off.x + off.y * off.y;
            d2.powf(-scheme.exponent)
        })
        .collect()
}

/// Assembles the 5×5 normal-equations matrix `A = Σᵢ wᵢ² cᵢ cᵢᵀ`.
///
/// Only the upper triangle is summed; the lower triangle mirrors it, so the
/// result is symmetric to the last bit.
#[allow(clippy::needless_range_loop)] // cross-indexed triangular fill
pub fn assemble_a(star: &Star, weights: &[f64]) -> [[f64; 5]; 5] {
    let mut a = [[0.0; 5]; 5];
    for (off, &w) in star.offsets.iter().zip(weights) {
        let c = taylor_row(off.x, off.y);
        let w2 = w * w;
        for r in 0..5 {
            for s in r..5 {
                a[r][s] += w2 * c[r] * c[s];
            }
        }
    }
    for r in 0..5 {
        for s in 0..r {
            a[r][s] = a[s][r];
        }
    }
    a
}

/// Solves the normal equations for every neighbor, producing the stencil.
///
/// The Cholesky pivot tolerance is `1e−12` relative to the largest diagonal
/// entry of `a`, so degeneracy detection is scale-invariant.
pub fn solve_lambdas(
    star: &Star,
    weights: &[f64],
    a: &[[f64; 5]; 5],
) -> Result<DerivativeStencil, StencilError> {
    let max_diag = (0..5).fold(0.0f64, |acc, i| acc.max(a[i][i]));
    let chol = Chol5::new(a, 1e-12 * max_diag).map_err(|NonPositivePivot(pivot)| {
        StencilError::DegenerateStar {
            center_id: star.center_id,
            pivot,
        }
    })?;

    let n = star.len();
    let mut lambda: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    for (i, (off, &w)) in star.offsets.iter().zip(weights).enumerate() {
        let c = taylor_row(off.x, off.y);
        let y = chol.solve(&c);
        let w2 = w * w;
        for r in 0..5 {
            lambda[r][i] = w2 * y[r];
        }
    }
    let lambda0: [f64; 5] = std::array::from_fn(|r| lambda[r].iter().sum());
    let lap: Vec<f64> = (0..n).map(|i| lambda[2][i] + lambda[3][i]).collect();
    let lap0 = lambda0[2] + lambda0[3];
    Ok(DerivativeStencil {
        center_id: star.center_id,
        neighbor_ids: star.neighbor_ids.clone(),
        lambda,
        lambda0,
        lap,
        lap0,
        cond_estimate: chol.diag_ratio(),
    })
}

/// Builds the full stencil for one node: star selection, weights, assembly,
/// and the least-squares solve.
pub fn build_derivative_stencil(
    cloud: &PointCloud,
    center_id: usize,
    star_size: usize,
    scheme: WeightScheme,
) -> Result<DerivativeStencil, StencilError> {
    let star = select_star(cloud, center_id, star_size)?;
    let weights = compute_weights(&star, scheme);
    let a = assemble_a(&star, &weights);
    solve_lambdas(&star, &weights, &a)
}

/// Derivative stencils for a set of nodes, with conditioning statistics.
#[derive(Clone, Debug)]
pub struct StencilSet {
    stencils: BTreeMap<usize, DerivativeStencil>,
    star_size: usize,
    weight_scheme: WeightScheme,
    cond_min: f64,
    cond_max: f64,
}

impl StencilSet {
    /// Assembles a set from prebuilt stencils; only tests need this (to craft
    /// pathological coefficient tables the builders would never produce).
    #[cfg(test)]
    pub(crate) fn from_raw_stencils(stencils: BTreeMap<usize, DerivativeStencil>) -> Self {
        let conds: Vec<f64> = stencils.values().map(|s| s.cond_estimate).collect();
        Self {
            star_size: stencils
                .values()
                .map(|s| s.neighbor_ids.len())
                .max()
                .unwrap_or(0),
            weight_scheme: WeightScheme::default(),
            cond_min: conds.iter().copied().fold(f64::INFINITY, f64::min),
            cond_max: conds.iter().copied().fold(0.0, f64::max),
            stencils,
        }
    }

    pub fn get(&self, center_id: usize) -> Option<&DerivativeStencil> {
        self.stencils.get(&center_id)
    }

    /// Iterates stencils in ascending center-id order.
    pub fn iter(&self) -> impl Iterator<Item = &DerivativeStencil> {
        self.stencils.values()
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    pub fn star_size(&self) -> usize {
        self.star_size
    }

    pub fn weight_scheme(&self) -> WeightScheme {
        self.weight_scheme
    }

    /// Smallest and largest conditioning estimate across all stars.
    pub fn cond_range(&self) -> (f64, f64) {
        (self.cond_min, self.cond_max)
    }
}

/// Builds stencils for every inner node of `cloud`.
pub fn build_stencil_set(
    cloud: &PointCloud,
    star_size: usize,
    scheme: WeightScheme,
) -> Result<StencilSet, StencilError> {
    build_set_for(cloud, star_size, scheme, |kind| kind == NodeKind::Inner)
}

/// Builds stencils for every inner *and* boundary node of `cloud`, the set
/// the time stepper needs (boundary nodes carry the PDE via their ghosts).
pub fn build_stencil_set_with_boundary(
    cloud: &PointCloud,
    star_size: usize,
    scheme: WeightScheme,
) -> Result<StencilSet, StencilError> {
    build_set_for(cloud, star_size, scheme, |kind| {
        kind != NodeKind::Fictitious
    })
}

fn build_set_for(
    cloud: &PointCloud,
    star_size: usize,
    scheme: WeightScheme,
    include: impl Fn(NodeKind) -> bool,
) -> Result<StencilSet, StencilError> {
    // Sequential on purpose: identical results on every run and machine.
    let mut stencils = BTreeMap::new();
    let mut cond_min = f64::INFINITY;
    let mut cond_max: f64 = 0.0;
    for node in cloud.nodes() {
        if !include(node.kind) {
            continue;
        }
        let stencil = build_derivative_stencil(cloud, node.id, star_size, scheme)?;
        cond_min = cond_min.min(stencil.cond_estimate);
        cond_max = cond_max.max(stencil.cond_estimate);
        stencils.insert(node.id, stencil);
    }
    if stencils.is_empty() {
        return Err(StencilError::InvalidParameter(
            "cloud has no nodes eligible for stencils".into(),
        ));
    }
    Ok(StencilSet {
        stencils,
        star_size,
        weight_scheme: scheme,
        cond_min,
        cond_max,
    })
}

/// Renders every stencil's coefficients as a fixed-width text table, one row
/// per (center, neighbor) pair. A debugging aid for inspecting individual
/// stars.
pub fn write_lambda_table(set: &StencilSet) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>14} {:>14} {:>14} {:>14} {:>14}",
        "center", "node", "dx", "dy", "dxx", "dyy", "dxy"
    );
    for st in set.iter() {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
            st.center_id,
            "self",
            -st.lambda0[0],
            -st.lambda0[1],
            -st.lambda0[2],
            -st.lambda0[3],
            -st.lambda0[4],
        );
        for (i, &id) in st.neighbor_ids.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>6} {:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
                st.center_id,
                id,
                st.lambda[0][i],
                st.lambda[1][i],
                st.lambda[2][i],
                st.lambda[3][i],
                st.lambda[4][i],
            );
        }
    }
    out
}

/// The Taylor row `c = (h, k, ½h², ½k², hk)` of a neighbor offset.
fn taylor_row(h: f64, k: f64) -> [f64; 5] {
    [h, k, 0.5 * h * h, 0.5 * k * k, h * k]
}
