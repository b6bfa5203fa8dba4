//! Implicit solve of the chemoattractant equation `0 = Δv − v + u`.
//!
//! At every real (inner or boundary) node `j` the Laplacian stencil turns the
//! equation into the linear row
//!
//! ```text
//! (1 + λ₀)·v_j − Σᵢ λᵢ·v_i = u_j,
//! ```
//!
//! and every fictitious node `f` contributes the slaving row
//! `v_f − v_mirror = 0`, which encodes the zero-flux boundary condition. The
//! matrix depends only on the geometry, so it is factored once (sparse LU;
//! the Laplacian rows are not symmetric between distinct stars) and reused
//! for every time step.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::geometry::{NodeKind, PointCloud};
use crate::stencil::StencilSet;

use super::SolverError;

/// Relative residual bound enforced after each solve.
const RESIDUAL_TOL: f64 = 1e-10;

/// Factored linear system for the chemoattractant field.
pub struct EllipticSystem {
    n: usize,
    /// Assembled entries `(row, col, value)`, kept for deterministic
    /// residual evaluation and iterative refinement.
    entries: Vec<(usize, usize, f64)>,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl EllipticSystem {
    /// Assembles and factors the system for `cloud`.
    ///
    /// `stencils` must cover every inner and boundary node.
    pub fn new(cloud: &PointCloud, stencils: &StencilSet) -> Result<Self, SolverError> {
        // Single-threaded math throughout: identical bits on every run.
        faer::set_global_parallelism(Par::Seq);
        let n = cloud.len();
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for node in cloud.nodes() {
            match node.kind {
                NodeKind::Fictitious => {
                    let mirror = node.mirror_id.ok_or_else(|| {
                        SolverError::Numeric(format!(
                            "fictitious node {} has no mirror node",
                            node.id
                        ))
                    })?;
                    entries.push((node.id, node.id, 1.0));
                    entries.push((node.id, mirror, -1.0));
                }
                _ => {
                    let st = stencils.get(node.id).ok_or_else(|| {
                        SolverError::Numeric(format!(
                            "no derivative stencil for {} node {}",
                            node.kind, node.id
                        ))
                    })?;
                    entries.push((node.id, node.id, 1.0 + st.lap0));
                    for (&i, &lam) in st.neighbor_ids.iter().zip(&st.lap) {
                        entries.push((node.id, i, -lam));
                    }
                }
            }
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = entries
            .iter()
            .map(|&(r, c, v)| Triplet::new(r, c, v))
            .collect();
        let matrix = SparseColMat::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| SolverError::Numeric(format!("sparse assembly failed: {e:?}")))?;
        let lu = matrix
            .sp_lu()
            .map_err(|e| SolverError::Numeric(format!("sparse LU factorization failed: {e:?}")))?;
        Ok(Self { n, entries, lu })
    }

    /// Solves for the chemoattractant field given the density `u`.
    ///
    /// `u` must cover every node (fictitious entries are ignored — their
    /// rows carry a zero right-hand side). One pass of iterative refinement
    /// tightens the LU solution; the final residual must satisfy
    /// `‖b − Av‖∞ ≤ 1e−10·‖b‖∞`.
    pub fn solve(&self, u: &[f64], cloud: &PointCloud) -> Result<Vec<f64>, SolverError> {
        assert_eq!(u.len(), self.n, "density field does not cover the cloud");
        let mut b = vec![0.0; self.n];
        for node in cloud.nodes() {
            if node.kind != NodeKind::Fictitious {
                b[node.id] = u[node.id];
            }
        }
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        let mut v: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();

        // One refinement pass compensates the factorization's rounding.
        let r = self.residual(&b, &v);
        let r_mat = Mat::from_fn(self.n, 1, |i, _| r[i]);
        let dx = self.lu.solve(&r_mat);
        for i in 0..self.n {
            v[i] += dx[(i, 0)];
        }

        let scale = b.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())).max(1.0);
        let res_norm = self
            .residual(&b, &v)
            .iter()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()));
        if !res_norm.is_finite() || res_norm > RESIDUAL_TOL * scale {
            return Err(SolverError::Numeric(format!(
                "chemoattractant solve residual {res_norm:.3e} exceeds {:.3e}",
                RESIDUAL_TOL * scale
            )));
        }
        Ok(v)
    }

    /// `b − A x`, accumulated in a fixed entry order.
    fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut r = b.to_vec();
        for &(row, col, val) in &self.entries {
            r[row] -= val * x[col];
        }
        r
    }
}
