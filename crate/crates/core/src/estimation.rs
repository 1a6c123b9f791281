//! Mean and covariance estimation from performance samples.
//!
//! The covariance is the unbiased sample covariance `S` (divisor `T − 1`),
//! optionally shrunk toward its own diagonal:
//!
//! ```text
//! Ω = (1 − s)·S + s·diag(S)
//! ```
//!
//! Shrinkage only scales the off-diagonal entries, so per-model variances are
//! preserved. With `s = 0` the plain sample covariance is returned and
//! degenerate data surfaces as [`Error::SingularCovariance`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, DefinitenessCheck};
use crate::model::{MomentEstimate, PerformanceSamples};

pub use crate::linalg::check_positive_definite;

/// Column means of the sample matrix.
pub fn sample_mean(values: &DMatrix<f64>) -> DVector<f64> {
    let t = values.nrows() as f64;
    DVector::from_iterator(
        values.ncols(),
        values.column_iter().map(|c| c.iter().sum::<f64>() / t),
    )
}

/// Unbiased sample covariance with divisor `T − 1`.
pub fn sample_covariance(values: &DMatrix<f64>) -> DMatrix<f64> {
    let (t, n) = values.shape();
    let mean = sample_mean(values);
    let mut centered = values.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    let mut cov = centered.transpose() * &centered / (t as f64 - 1.0);
    // enforce exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// `(1 − s)·S + s·diag(S)`.
pub fn shrink_to_diagonal(cov: &DMatrix<f64>, shrinkage: f64) -> DMatrix<f64> {
    let keep = 1.0 - shrinkage;
    DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| {
        if i == j {
            cov[(i, j)]
        } else {
            keep * cov[(i, j)]
        }
    })
}

pub fn estimate_moments(samples: &PerformanceSamples, shrinkage: f64) -> Result<MomentEstimate> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::InvalidParameter(format!(
            "shrinkage must lie in [0, 1], got {shrinkage}"
        )));
    }
    if samples.trials() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.trials(),
        });
    }
    let values = samples.values();
    let mu = sample_mean(values);
    let omega = shrink_to_diagonal(&sample_covariance(values), shrinkage);
    MomentEstimate::new(mu, omega)
}

/// Positive-definiteness report for an estimated covariance, without
/// constructing a [`MomentEstimate`].
pub fn covariance_definiteness(
    samples: &PerformanceSamples,
    shrinkage: f64,
) -> Result<DefinitenessCheck> {
    let omega = shrink_to_diagonal(&sample_covariance(samples.values()), shrinkage);
    linalg::check_positive_definite(&omega)
}
