//! Small dense Cholesky factorization that reports its pivots.
//!
//! The pivot of column `j` is `a_jj - sum_k l_jk^2`, i.e. the diagonal entry
//! before the square root is taken. A matrix counts as positive definite when
//! every pivot exceeds [`PIVOT_TOLERANCE`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest admissible Cholesky pivot.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Absolute elementwise tolerance for symmetry checks.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Outcome of [`check_positive_definite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefinitenessCheck {
    pub positive_definite: bool,
    /// Smallest pivot encountered before the factorization stopped.
    pub min_pivot: f64,
    /// Index of the first pivot at or below tolerance, if any.
    pub failed_pivot: Option<usize>,
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: DMatrix<f64>,
    min_pivot: f64,
}

pub fn ensure_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (a[(i, j)] - a[(j, i)]).abs();
            // NaN compares false, so test the negation.
            if !(diff <= SYMMETRY_TOLERANCE) {
                return Err(Error::Asymmetric {
                    row: i,
                    col: j,
                    diff,
                });
            }
        }
    }
    Ok(())
}

/// Runs the factorization and reports whether all pivots clear the tolerance.
pub fn check_positive_definite(a: &DMatrix<f64>) -> Result<DefinitenessCheck> {
    ensure_symmetric(a)?;
    Ok(match factor(a) {
        Ok(chol) => DefinitenessCheck {
            positive_definite: true,
            min_pivot: chol.min_pivot,
            failed_pivot: None,
        },
        Err(failure) => DefinitenessCheck {
            positive_definite: false,
            min_pivot: failure.min_pivot,
            failed_pivot: Some(failure.index),
        },
    })
}

struct FactorFailure {
    index: usize,
    pivot: f64,
    min_pivot: f64,
}

fn factor(a: &DMatrix<f64>) -> std::result::Result<Cholesky, FactorFailure> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut min_pivot = f64::INFINITY;
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        min_pivot = min_pivot.min(pivot);
        if !(pivot > PIVOT_TOLERANCE) {
            return Err(FactorFailure {
                index: j,
                pivot,
                min_pivot: if pivot.is_nan() { pivot } else { min_pivot },
            });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(Cholesky { l, min_pivot })
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        ensure_symmetric(a)?;
        factor(a).map_err(|f| Error::SingularCovariance {
            index: f.index,
            pivot: f.pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solves `A x = b` by forward then backward substitution.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        let l = &self.l;
        let mut y = DVector::<f64>::zeros(n);
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        let mut x = DVector::<f64>::zeros(n);
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        x
    }
}

/// `xᵀ A x` for symmetric `A`.
pub fn quadratic_form(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    (a * x).dot(x)
}
