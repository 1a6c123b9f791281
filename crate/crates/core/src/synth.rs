//! Synthetic performance data for model populations.
//!
//! Draws are multivariate normal with per-model means and standard deviations
//! and a single pairwise correlation shared by every pair.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::model::{DomainTag, PerformanceSamples};

/// Target distribution of one model's performance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelProfile {
    pub tag: DomainTag,
    pub mean: f64,
    pub stddev: f64,
}

impl ModelProfile {
    pub fn new(tag: DomainTag, mean: f64, stddev: f64) -> Self {
        Self { tag, mean, stddev }
    }
}

/// Equicorrelation matrix with unit diagonal.
pub fn equicorrelation(n: usize, correlation: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { correlation })
}

/// Open interval of correlations that keep an `n`-model equicorrelation
/// matrix positive definite.
pub fn correlation_bounds(n: usize) -> (f64, f64) {
    if n <= 1 {
        (-1.0, 1.0)
    } else {
        (-1.0 / (n as f64 - 1.0), 1.0)
    }
}

pub fn gen_population(
    profiles: &[ModelProfile],
    correlation: f64,
    trials: usize,
    seed: u64,
) -> Result<PerformanceSamples> {
    let n = profiles.len();
    if n == 0 {
        return Err(Error::InvalidParameter("population is empty".into()));
    }
    if trials < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: trials,
        });
    }
    for (i, p) in profiles.iter().enumerate() {
        if !(p.stddev > 0.0) || !p.stddev.is_finite() || !p.mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "model {i}: mean must be finite and stddev positive, got ({}, {})",
                p.mean, p.stddev
            )));
        }
    }
    let (lo, hi) = correlation_bounds(n);
    if !(correlation > lo && correlation < hi) {
        return Err(Error::InvalidParameter(format!(
            "correlation {correlation} must lie in ({lo}, {hi}) for {n} models"
        )));
    }
    let chol = Cholesky::new(&equicorrelation(n, correlation)).map_err(|e| {
        Error::InvalidParameter(format!(
            "correlation {correlation} is numerically singular: {e}"
        ))
    })?;
    let l = chol.factor();
    let means = DVector::from_iterator(n, profiles.iter().map(|p| p.mean));
    let sds = DVector::from_iterator(n, profiles.iter().map(|p| p.stddev));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = DMatrix::<f64>::zeros(trials, n);
    let mut z = DVector::<f64>::zeros(n);
    for t in 0..trials {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let x = l * &z;
        for j in 0..n {
            values[(t, j)] = means[j] + sds[j] * x[j];
        }
    }

    let mut counts = std::collections::HashMap::new();
    let ids = profiles
        .iter()
        .map(|p| {
            let k = counts.entry(p.tag).or_insert(0usize);
            *k += 1;
            format!("{}_{}", p.tag.as_str().to_ascii_lowercase(), *k)
        })
        .collect();
    let tags = profiles.iter().map(|p| p.tag).collect();
    PerformanceSamples::new(values, ids, tags)
}

/// Illustrative three-model population: an accurate but noisy AI model, a
/// consistent but less accurate physics model, and an expert model in between.
pub const DEFAULT_SCENARIO: [ModelProfile; 3] = [
    ModelProfile {
        tag: DomainTag::AI,
        mean: 0.90,
        stddev: 0.08,
    },
    ModelProfile {
        tag: DomainTag::Physics,
        mean: 0.78,
        stddev: 0.03,
    },
    ModelProfile {
        tag: DomainTag::Expert,
        mean: 0.84,
        stddev: 0.05,
    },
];
pub const DEFAULT_CORRELATION: f64 = 0.3;
pub const DEFAULT_TRIALS: usize = 5000;

pub fn default_peai_scenario(seed: u64) -> PerformanceSamples {
    gen_population(&DEFAULT_SCENARIO, DEFAULT_CORRELATION, DEFAULT_TRIALS, seed)
        .expect("default scenario parameters are valid")
}
