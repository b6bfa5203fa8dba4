//! Cholesky factorization of the 5×5 normal-equations matrix.
//!
//! The least-squares fit behind every derivative stencil reduces to a
//! symmetric positive-definite 5×5 system. The size is fixed, so the
//! factorization is written out directly rather than pulled from a linear
//! algebra crate: it keeps the per-star cost predictable and makes the
//! degeneracy check (a non-positive pivot) explicit.

// Triangular kernels address two positions of the same matrix per step;
// indexed loops match the factorization as written in any reference text.
#![allow(clippy::needless_range_loop)]

/// Lower-triangular Cholesky factor of a 5×5 SPD matrix, `A = L Lᵀ`.
#[derive(Clone, Copy, Debug)]
pub struct Chol5 {
    l: [[f64; 5]; 5],
}

/// Index of the first non-positive pivot encountered, meaning the matrix is
/// not (numerically) positive definite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NonPositivePivot(pub usize);

impl Chol5 {
    /// Factors `a`, failing on the first pivot at or below `tol`.
    ///
    /// `tol` guards against stars whose geometry cannot determine all five
    /// derivatives (e.g. collinear neighbors); callers scale it relative to
    /// the magnitude of `a`.
    pub fn new(a: &[[f64; 5]; 5], tol: f64) -> Result<Self, NonPositivePivot> {
        let mut l = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..=i {
                let mut sum = a[i][j];
                for k in 0..j {
                    sum -= l[i][k] * l[j][k];
                }
                if i == j {
                    if sum <= tol {
                        return Err(NonPositivePivot(i));
                    }
                    l[i][i] = sum.sqrt();
                } else {
                    l[i][j] = sum / l[j][j];
                }
            }
        }
        Ok(Self { l })
    }

    /// Solves `A x = b` via forward and back substitution.
    pub fn solve(&self, b: &[f64; 5]) -> [f64; 5] {
        let l = &self.l;
        let mut y = [0.0; 5];
        for i in 0..5 {
            let mut sum = b[i];
            for k in 0..i {
                sum -= l[i][k] * y[k];
            }
            y[i] = sum / l[i][i];
        }
        let mut x = [0.0; 5];
        for i in (0..5).rev() {
            let mut sum = y[i];
            for k in i + 1..5 {
                sum -= l[k][i] * x[k];
            }
            x[i] = sum / l[i][i];
        }
        x
    }

    /// Ratio of the largest to the smallest diagonal entry of `L`: a cheap
    /// proxy for the conditioning of the fitted star. Well-shaped stars stay
    /// within a few orders of magnitude; a huge ratio flags a nearly
    /// degenerate geometry.
    pub fn diag_ratio(&self) -> f64 {
        let mut min = f64::INFINITY;
        let mut max = 0.0f64;
        for i in 0..5 {
            min = min.min(self.l[i][i]);
            max = max.max(self.l[i][i]);
        }
        max / min
    }

    /// Reconstructs `L Lᵀ`; used by tests to bound the factorization residual.
    #[cfg(test)]
    pub fn reconstruct(&self) -> [[f64; 5]; 5] {
        let mut a = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                let mut sum = 0.0;
                for k in 0..5 {
                    sum += self.l[i][k] * self.l[j][k];
                }
                a[i][j] = sum;
            }
        }
        a
    }
}
