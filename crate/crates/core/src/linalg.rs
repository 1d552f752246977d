//! Dense symmetric helpers shared by the statistics and the simulation code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative pivot floor for the Cholesky factorization.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Lower Cholesky factor of a symmetric positive-definite matrix.
///
/// Only the lower triangle of the input is read. A pivot at or below
/// `PIVOT_TOLERANCE * max(diag)` is reported as [`Error::NotPositiveDefinite`].
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: DMatrix<f64>,
}

impl SpdFactor {
    pub fn new(matrix: &DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.ncols(),
                context: "square matrix for factorization",
            });
        }
        let max_diag = matrix.diagonal().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max_diag.is_finite() {
            return Err(Error::NonFinite("matrix diagonal"));
        }
        let threshold = PIVOT_TOLERANCE * max_diag.max(0.0);

        // Right-looking factorization; the trailing update walks columns contiguously.
        let mut a = matrix.clone();
        for j in 0..n {
            let pivot = a[(j, j)];
            if !(pivot > threshold) {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    pivot,
                    threshold,
                });
            }
            let root = pivot.sqrt();
            a[(j, j)] = root;
            for i in j + 1..n {
                a[(i, j)] /= root;
            }
            for k in j + 1..n {
                let ljk = a[(k, j)];
                if ljk == 0.0 {
                    continue;
                }
                for i in k..n {
                    let lij = a[(i, j)];
                    a[(i, k)] -= lij * ljk;
                }
            }
        }
        for j in 1..n {
            for i in 0..j {
                a[(i, j)] = 0.0;
            }
        }
        Ok(Self { lower: a })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Solves `L z = b`.
    pub fn forward(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut z = b.clone();
        for j in 0..n {
            let zj = z[j] / self.lower[(j, j)];
            z[j] = zj;
            for i in j + 1..n {
                z[i] -= self.lower[(i, j)] * zj;
            }
        }
        z
    }

    /// Solves `A x = b` with `A = L L'`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = self.forward(b);
        for j in (0..n).rev() {
            let mut s = x[j];
            for i in j + 1..n {
                s -= self.lower[(i, j)] * x[i];
            }
            x[j] = s / self.lower[(j, j)];
        }
        x
    }

    /// `b' A⁻¹ b`, computed as `|L⁻¹ b|²` so the result is never negative.
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        self.forward(b).norm_squared()
    }
}

/// Copies the lower triangle onto the upper one.
pub fn symmetrize_from_lower(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 1..n {
        for i in 0..j {
            m[(i, j)] = m[(j, i)];
        }
    }
}

/// Eigendecomposition-based function of a symmetric matrix: `V diag(g(λ)) V'`.
pub fn sym_apply(eig: &SymmetricEigen<f64, nalgebra::Dyn>, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * g(eig.eigenvalues[j]));
    let mut out = &scaled * v.transpose();
    symmetrize_from_lower(&mut out);
    out
}

/// Smallest and largest eigenvalue.
pub fn eigen_range(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> (f64, f64) {
    eig.eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)))
}

/// Inverse symmetric square root `S^{-1/2}`; eigenvalues at or below
/// `PIVOT_TOLERANCE * λ_max` are rejected.
pub fn inv_sqrt_spd(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(matrix.clone());
    let (lo, hi) = eigen_range(&eig);
    let threshold = PIVOT_TOLERANCE * hi.max(0.0);
    if !(lo > threshold) {
        let index = eig
            .eigenvalues
            .iter()
            .position(|&l| l == lo)
            .unwrap_or(0);
        return Err(Error::NotPositiveDefinite {
            index,
            pivot: lo,
            threshold,
        });
    }
    Ok(sym_apply(&eig, |l| 1.0 / l.sqrt()))
}
