//! Brute-force reference minimizers for small problems.
//!
//! Nothing here calls into [`crate::frontier`]: the grid search enumerates
//! candidate weights directly and the descent polisher only uses gradients
//! and projections, so agreement with the closed form is a genuine check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{MomentEstimate, Portfolio};

/// Largest model count the grid search accepts.
pub const MAX_GRID_MODELS: usize = 5;

/// Residual bound on the equality constraints after refinement.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
struct Candidate {
    variance: f64,
    weights: Vec<f64>,
}

impl Candidate {
    // lower variance wins; ties go to the lexicographically smallest weights
    fn better_than(&self, other: &Candidate) -> bool {
        match self.variance.total_cmp(&other.variance) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                for (a, b) in self.weights.iter().zip(&other.weights) {
                    match a.total_cmp(b) {
                        std::cmp::Ordering::Less => return true,
                        std::cmp::Ordering::Greater => return false,
                        _ => {}
                    }
                }
                false
            }
        }
    }
}

fn pick(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.better_than(&a) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

struct GridProblem<'a> {
    omega: &'a DMatrix<f64>,
    mu: &'a DVector<f64>,
    mu_c: f64,
    band: f64,
    step: f64,
    k_lo: i64,
    k_hi: i64,
    lo: f64,
    hi: f64,
    long_only: bool,
}

impl GridProblem<'_> {
    fn n(&self) -> usize {
        self.mu.len()
    }

    fn value(&self, k: i64) -> f64 {
        k as f64 * self.step
    }

    // Enumerate the remaining free coordinates recursively, starting at `pos`.
    fn search(&self, prefix: &mut Vec<f64>, best: &mut Option<Candidate>) {
        let n = self.n();
        let free = n - 1;
        let pos = prefix.len();
        if pos == free {
            self.consider(prefix, best);
            return;
        }
        let (mut k_lo, mut k_hi) = (self.k_lo, self.k_hi);
        if pos == free - 1 {
            // The mean is affine in the last free weight; only grid values
            // inside the tolerance band can survive the filter.
            let sum: f64 = prefix.iter().sum();
            let base: f64 = prefix
                .iter()
                .zip(self.mu.iter())
                .map(|(w, m)| w * m)
                .sum::<f64>()
                + self.mu[n - 1] * (1.0 - sum);
            let slope = self.mu[pos] - self.mu[n - 1];
            if slope != 0.0 {
                let a = (self.mu_c - self.band - base) / slope;
                let b = (self.mu_c + self.band - base) / slope;
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                k_lo = k_lo.max((a / self.step).floor() as i64 - 1);
                k_hi = k_hi.min((b / self.step).ceil() as i64 + 1);
            }
        }
        for k in k_lo..=k_hi {
            prefix.push(self.value(k));
            self.search(prefix, best);
            prefix.pop();
        }
    }

    fn consider(&self, prefix: &[f64], best: &mut Option<Candidate>) {
        let mut w: Vec<f64> = prefix.to_vec();
        let mut last = 1.0 - prefix.iter().sum::<f64>();
        let slack = 1e-12;
        if last < self.lo - slack || last > self.hi + slack {
            return;
        }
        if self.long_only {
            if last < -slack {
                return;
            }
            last = last.max(0.0);
        }
        w.push(last);
        let mean: f64 = w.iter().zip(self.mu.iter()).map(|(a, b)| a * b).sum();
        if !((mean - self.mu_c).abs() <= self.band) {
            return;
        }
        let mut variance = 0.0;
        for (i, wi) in w.iter().enumerate() {
            let row: f64 = w
                .iter()
                .enumerate()
                .map(|(j, wj)| self.omega[(i, j)] * wj)
                .sum();
            variance += wi * row;
        }
        let cand = Candidate {
            variance,
            weights: w,
        };
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            *best = Some(cand);
        }
    }
}

/// Exhaustive search over weight grids.
///
/// The free weights `w₁..w_{N−1}` range over the integer multiples of `step`
/// inside `bounds`; `w_N = 1 − Σ` must also lie in `bounds`. Candidates whose
/// mean misses `mu_c` by more than `step·(max μ − min μ)` are discarded, and
/// with `long_only` so is any candidate with a negative weight. Ties are broken
/// by the lexicographically smallest weight vector, so the result does not
/// depend on how the enumeration is partitioned across threads.
pub fn grid_min_variance(
    moments: &MomentEstimate,
    mu_c: f64,
    bounds: (f64, f64),
    step: f64,
    long_only: bool,
) -> Result<Portfolio> {
    let n = moments.n_models();
    if n > MAX_GRID_MODELS {
        return Err(Error::SizeLimit {
            n,
            limit: MAX_GRID_MODELS,
        });
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid step must be positive, got {step}"
        )));
    }
    let (lo, hi) = bounds;
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid grid bounds [{lo}, {hi}]"
        )));
    }
    if long_only && (lo > 0.0 || hi < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "long-only search needs bounds containing [0, 1], got [{lo}, {hi}]"
        )));
    }
    if !mu_c.is_finite() {
        return Err(Error::NonFinite("target mean"));
    }
    let (mu_min, mu_max) = moments.mu_range();
    let eff_lo = if long_only { lo.max(0.0) } else { lo };
    let problem = GridProblem {
        omega: moments.omega(),
        mu: moments.mu(),
        mu_c,
        band: step * (mu_max - mu_min),
        step,
        k_lo: (eff_lo / step).ceil() as i64,
        k_hi: (hi / step).floor() as i64,
        lo: eff_lo,
        hi,
        long_only,
    };

    let best = if n == 1 {
        let mut best = None;
        problem.consider(&[], &mut best);
        best
    } else {
        (problem.k_lo..=problem.k_hi)
            .into_par_iter()
            .map(|k| {
                let mut best = None;
                let mut prefix = vec![problem.value(k)];
                problem.search(&mut prefix, &mut best);
                best
            })
            .reduce(|| None, pick)
    };

    match best {
        Some(c) => Portfolio::evaluate(moments, DVector::from_vec(c.weights)),
        None => Err(Error::Infeasible {
            target: mu_c,
            lo: mu_min,
            hi: mu_max,
        }),
    }
}

// Orthogonal projection onto {w : 1ᵀw = 1, μᵀw = μ_C}. When μ is constant
// only the budget row is used.
struct AffineSet {
    rows: Vec<DVector<f64>>,
    rhs: Vec<f64>,
    gram_inv: DMatrix<f64>,
}

impl AffineSet {
    fn new(mu: &DVector<f64>, mu_c: f64) -> Self {
        let n = mu.len();
        let ones = DVector::from_element(n, 1.0);
        let two = {
            let g = DMatrix::from_row_slice(
                2,
                2,
                &[ones.dot(&ones), ones.dot(mu), mu.dot(&ones), mu.dot(mu)],
            );
            let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
            if det > 1e-12 * g[(0, 0)] * g[(1, 1)] {
                g.try_inverse()
            } else {
                None
            }
        };
        match two {
            Some(gram_inv) => Self {
                rows: vec![ones, mu.clone()],
                rhs: vec![1.0, mu_c],
                gram_inv,
            },
            None => Self {
                rows: vec![ones],
                rhs: vec![1.0],
                gram_inv: DMatrix::from_element(1, 1, 1.0 / n as f64),
            },
        }
    }

    fn residual(&self, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().zip(&self.rhs).map(|(r, b)| r.dot(w) - b),
        )
    }

    fn correct(&self, w: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        let coef = &self.gram_inv * r;
        let mut out = w.clone();
        for (row, c) in self.rows.iter().zip(coef.iter()) {
            out.axpy(-c, row, 1.0);
        }
        out
    }

    fn project(&self, w: &DVector<f64>) -> DVector<f64> {
        self.correct(w, &self.residual(w))
    }

    // Projection of a direction onto the null space of the constraint rows.
    fn project_direction(&self, d: &DVector<f64>) -> DVector<f64> {
        let r = DVector::from_iterator(self.rows.len(), self.rows.iter().map(|row| row.dot(d)));
        self.correct(d, &r)
    }

    fn max_residual(&self, w: &DVector<f64>) -> f64 {
        self.residual(w).amax()
    }
}

// Dykstra's alternating projections onto the affine set and the orthant.
fn project_long_only(affine: &AffineSet, v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    let mut x = v.clone();
    let mut p = DVector::zeros(n);
    let mut q = DVector::zeros(n);
    for _ in 0..20_000 {
        let y = affine.project(&(&x + &p));
        p = &x + &p - &y;
        let z = (&y + &q).map(|c| c.max(0.0));
        q = &y + &q - &z;
        let moved = (&z - &x).amax();
        x = z;
        if moved <= 1e-15 && affine.max_residual(&x) <= 1e-13 {
            break;
        }
    }
    x
}

/// Polishes a feasible start with projected gradient descent on `wᵀΩw`.
///
/// The start is first projected onto the constraint set; the returned
/// variance never exceeds the variance of that projected start (the best
/// iterate is kept). Without `long_only` each step is an exact line search
/// along the projected negative gradient. With `long_only` a fixed `1/L` step
/// is followed by a projection onto `{w ≥ 0} ∩ {1ᵀw = 1, μᵀw = μ_C}`.
pub fn refine_projected_descent(
    moments: &MomentEstimate,
    start: &Portfolio,
    mu_c: f64,
    long_only: bool,
    iters: usize,
) -> Result<Portfolio> {
    let n = moments.n_models();
    if start.weights().len() != n {
        return Err(Error::Dimension(format!(
            "start has {} weights for {n} models",
            start.weights().len()
        )));
    }
    if !mu_c.is_finite() {
        return Err(Error::NonFinite("target mean"));
    }
    let omega = moments.omega();
    let affine = AffineSet::new(moments.mu(), mu_c);
    let objective = |w: &DVector<f64>| moments.variance_of(w);

    let mut w = affine.project(start.weights());
    if long_only {
        w = project_long_only(&affine, &w);
    }
    let mut f = objective(&w);
    let mut best = (f, w.clone());
    // Gershgorin bound on the largest eigenvalue of 2Ω
    let lipschitz = 2.0
        * omega
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
    let mut rising = 0usize;

    for _ in 0..iters {
        let grad = omega * &w * 2.0;
        let next = if long_only {
            project_long_only(&affine, &(&w - &grad / lipschitz))
        } else {
            let d = -affine.project_direction(&grad);
            // stationary once the projected gradient is round-off
            if d.norm() <= 1e-13 * (1.0 + grad.norm()) {
                break;
            }
            let curvature = 2.0 * crate::linalg::quadratic_form(omega, &d);
            if !(curvature > 0.0) {
                break;
            }
            // -gᵀd equals |d|² for an orthogonal projection
            let t = d.norm_squared() / curvature;
            affine.project(&(&w + d * t))
        };
        let moved = (&next - &w).amax();
        let f_next = objective(&next);
        if f_next > f + 1e-15 * (1.0 + f.abs()) {
            rising += 1;
            if rising >= 10 {
                return Err(Error::Numerical(
                    "projected descent diverged: variance rose over 10 consecutive steps".into(),
                ));
            }
        } else {
            rising = 0;
        }
        w = next;
        f = f_next;
        if f < best.0 {
            best = (f, w.clone());
        }
        if moved <= 1e-16 * (1.0 + w.amax()) {
            break;
        }
    }

    let (_, mut w) = best;
    if long_only {
        w.apply(|c| {
            if *c < 0.0 && *c > -1e-12 {
                *c = 0.0
            }
        });
    }
    if affine.max_residual(&w) > FEASIBILITY_TOLERANCE {
        return Err(Error::Numerical(format!(
            "refined weights violate the constraints by {:e}",
            affine.max_residual(&w)
        )));
    }
    Portfolio::evaluate(moments, w)
}

/// Grid search followed by refinement.
pub fn oracle_min_variance(
    moments: &MomentEstimate,
    mu_c: f64,
    bounds: (f64, f64),
    step: f64,
    long_only: bool,
    iters: usize,
) -> Result<Portfolio> {
    let coarse = grid_min_variance(moments, mu_c, bounds, step, long_only)?;
    refine_projected_descent(moments, &coarse, mu_c, long_only, iters)
}

/// Random test instance: `Ω = AᵀA + 0.1·I` with standard normal `A`, and `μ`
/// uniform on `[0, 2]` redrawn until its spread is at least 0.5.
pub fn random_instance(n: usize, seed: u64) -> MomentEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let mut omega = a.transpose() * &a + DMatrix::identity(n, n) * 0.1;
    for i in 0..n {
        for j in (i + 1)..n {
            omega[(j, i)] = omega[(i, j)];
        }
    }
    let mu = loop {
        let mu = DVector::<f64>::from_fn(n, |_, _| rng.random_range(0.0..2.0));
        if n == 1 || mu.max() - mu.min() >= 0.5 {
            break mu;
        }
    };
    MomentEstimate::new(mu, omega).expect("AᵀA + 0.1·I is positive definite")
}

/// Random weights on the hyperplane `Σw = 1`.
pub fn random_affine_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    let raw = DVector::<f64>::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let shift = (1.0 - raw.sum()) / n as f64;
    raw.add_scalar(shift)
}
