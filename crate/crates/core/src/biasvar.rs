//! Monte-Carlo bias-variance decomposition of squared error.
//!
//! For a target `y = f(x) + ε` with `E[ε] = 0`, `E[ε²] = σ²` and an estimator
//! `F̂` fitted on an independent training set,
//!
//! ```text
//! E[(y − F̂)²] = (f(x) − E[F̂])² + σ² + Var[F̂]
//! ```
//!
//! [`decompose`] estimates each term by refitting the estimator on fresh
//! training sets and scoring it on fresh noisy targets, so the identity is
//! checked empirically rather than assumed.
//!
//! "Complexity" for the polynomial family is its degree. A family may carry an
//! output clamp standing in for a physical constraint on the predictions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BiasVarianceReport, ComponentErrors};

/// Fewest replicates [`decompose`] accepts.
pub const MIN_REPLICATES: usize = 100;

/// Deterministic regression function.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    /// `c₀ + c₁x + c₂x² + …`
    Polynomial(Vec<f64>),
    /// `amplitude · sin(frequency · x)`
    Sine { amplitude: f64, frequency: f64 },
}

impl Truth {
    pub fn constant(c: f64) -> Self {
        Truth::Polynomial(vec![c])
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Truth::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &k| acc * x + k),
            Truth::Sine {
                amplitude,
                frequency,
            } => amplitude * (frequency * x).sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Every training input equals this value.
    Fixed(f64),
}

impl InputDistribution {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            InputDistribution::Uniform { lo, hi } => rng.random_range(lo..hi),
            InputDistribution::Fixed(x) => x,
        }
    }
}

/// Regression task with zero-mean Gaussian noise of standard deviation
/// `noise_sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    truth: Truth,
    noise_sigma: f64,
    inputs: InputDistribution,
    seed: u64,
}

impl SyntheticTask {
    pub fn new(
        truth: Truth,
        noise_sigma: f64,
        inputs: InputDistribution,
        seed: u64,
    ) -> Result<Self> {
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise standard deviation must be finite and nonnegative, got {noise_sigma}"
            )));
        }
        if let InputDistribution::Uniform { lo, hi } = inputs {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "invalid input range [{lo}, {hi}]"
                )));
            }
        }
        let finite = match &truth {
            Truth::Polynomial(c) => !c.is_empty() && c.iter().all(|v| v.is_finite()),
            Truth::Sine {
                amplitude,
                frequency,
            } => amplitude.is_finite() && frequency.is_finite(),
        };
        if !finite {
            return Err(Error::InvalidParameter(
                "truth coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            truth,
            noise_sigma,
            inputs,
            seed,
        })
    }

    pub fn truth(&self) -> &Truth {
        &self.truth
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_sigma * self.noise_sigma
    }

    pub fn inputs(&self) -> InputDistribution {
        self.inputs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    fn noisy<R: Rng>(&self, x: f64, rng: &mut R) -> f64 {
        let eps: f64 = rng.sample(StandardNormal);
        self.truth.eval(x) + self.noise_sigma * eps
    }
}

/// Predictions are clamped into `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputClamp {
    pub lo: f64,
    pub hi: f64,
}

impl OutputClamp {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid clamp [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn apply(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    /// Ignores the data and always predicts the given value.
    Fixed(f64),
    /// Mean of the training targets.
    SampleMean,
    /// Least-squares polynomial of degree `complexity`.
    Polynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorFamily {
    pub family_id: String,
    pub kind: FamilyKind,
    pub complexity: usize,
    pub constraint: Option<OutputClamp>,
}

impl EstimatorFamily {
    pub fn fixed(value: f64) -> Self {
        Self {
            family_id: "fixed".into(),
            kind: FamilyKind::Fixed(value),
            complexity: 0,
            constraint: None,
        }
    }

    pub fn sample_mean() -> Self {
        Self {
            family_id: "mean".into(),
            kind: FamilyKind::SampleMean,
            complexity: 0,
            constraint: None,
        }
    }

    pub fn polynomial(degree: usize) -> Self {
        Self {
            family_id: "poly".into(),
            kind: FamilyKind::Polynomial,
            complexity: degree,
            constraint: None,
        }
    }

    pub fn with_clamp(mut self, clamp: OutputClamp) -> Self {
        self.constraint = Some(clamp);
        self
    }

    pub fn unconstrained(&self) -> Self {
        Self {
            constraint: None,
            ..self.clone()
        }
    }

    pub fn with_complexity(&self, complexity: usize) -> Self {
        Self {
            complexity,
            ..self.clone()
        }
    }

    fn fit(&self, xs: &[f64], ys: &[f64]) -> Result<Fitted> {
        let fitted = match self.kind {
            FamilyKind::Fixed(c) => Fitted::Constant(c),
            FamilyKind::SampleMean => Fitted::Constant(shifted_mean(ys)),
            FamilyKind::Polynomial if self.complexity == 0 && !ys.is_empty() => {
                Fitted::Constant(shifted_mean(ys))
            }
            FamilyKind::Polynomial => Fitted::Polynomial(fit_polynomial(xs, ys, self.complexity)?),
        };
        Ok(fitted)
    }

    fn predict(&self, fitted: &Fitted, x: f64) -> f64 {
        let raw = fitted.eval(x);
        match self.constraint {
            Some(c) => c.apply(raw),
            None => raw,
        }
    }
}

// Mean taken relative to the first value, so constant data is reproduced exactly.
fn shifted_mean(ys: &[f64]) -> f64 {
    let y0 = ys[0];
    y0 + ys.iter().map(|y| y - y0).sum::<f64>() / ys.len() as f64
}

enum Fitted {
    Constant(f64),
    Polynomial(DVector<f64>),
}

impl Fitted {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Fitted::Constant(c) => *c,
            Fitted::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &k| acc * x + k),
        }
    }
}

/// Least-squares coefficients (lowest order first) via thin QR of the
/// Vandermonde matrix.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<DVector<f64>> {
    let n = xs.len();
    let p = degree + 1;
    if n < p {
        return Err(Error::IllPosedFit(format!(
            "degree {degree} needs at least {p} training points, got {n}"
        )));
    }
    let design = DMatrix::from_fn(n, p, |i, k| xs[i].powi(k as i32));
    let qr = design.qr();
    let r = qr.r();
    let max_diag = r.diagonal().amax();
    if !(max_diag > 0.0) || r.diagonal().iter().any(|d| !(d.abs() > 1e-10 * max_diag)) {
        return Err(Error::IllPosedFit(format!(
            "design matrix for degree {degree} is rank deficient"
        )));
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(ys);
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::IllPosedFit("triangular solve failed".into()))
}

// Per-replicate RNG: stream `index` of the task seed.
fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

struct Replicate {
    predictions: Vec<f64>,
    squared_errors: Vec<f64>,
}

fn run_replicate(
    task: &SyntheticTask,
    family: &EstimatorFamily,
    train_size: usize,
    eval_points: &[f64],
    index: usize,
) -> Result<Replicate> {
    let mut rng = replicate_rng(task.seed, index);
    let xs: Vec<f64> = (0..train_size)
        .map(|_| task.inputs.draw(&mut rng))
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| task.noisy(x, &mut rng)).collect();
    let fitted = family.fit(&xs, &ys)?;
    let mut predictions = Vec::with_capacity(eval_points.len());
    let mut squared_errors = Vec::with_capacity(eval_points.len());
    for &x0 in eval_points {
        let pred = family.predict(&fitted, x0);
        let target = task.noisy(x0, &mut rng);
        predictions.push(pred);
        squared_errors.push((target - pred) * (target - pred));
    }
    Ok(Replicate {
        predictions,
        squared_errors,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64], m: f64) -> f64 {
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (v.len() as f64 - 1.0)).sqrt()
}

fn pointwise_report(
    truth_value: f64,
    noise: f64,
    preds: &[f64],
    errs: &[f64],
) -> BiasVarianceReport {
    let r = preds.len() as f64;
    let mean_pred = shifted_mean(preds);
    let dev2: Vec<f64> = preds
        .iter()
        .map(|p| (p - mean_pred) * (p - mean_pred))
        .collect();
    let variance = dev2.iter().sum::<f64>() / (r - 1.0);
    let bias = truth_value - mean_pred;
    let mse = mean(errs);
    let sd_pred = variance.sqrt();
    BiasVarianceReport {
        bias2: bias * bias,
        variance,
        noise,
        mse,
        standard_errors: ComponentErrors {
            // delta method plus the O(1/R) bias of the squared mean
            bias2: 2.0 * bias.abs() * sd_pred / r.sqrt() + variance / r,
            variance: sample_sd(&dev2, mean(&dev2)) / r.sqrt(),
            noise: 0.0,
            mse: sample_sd(errs, mse) / r.sqrt(),
        },
    }
}

/// Pointwise decomposition at `eval_point`.
pub fn decompose(
    task: &SyntheticTask,
    family: &EstimatorFamily,
    train_size: usize,
    replicates: usize,
    eval_point: f64,
) -> Result<BiasVarianceReport> {
    decompose_averaged(task, family, train_size, replicates, &[eval_point])
}

/// Decomposition averaged over several evaluation points. Each replicate
/// fits once and is scored at every point; standard errors are averaged,
/// which bounds the standard error of the average whatever the correlation
/// between points.
pub fn decompose_averaged(
    task: &SyntheticTask,
    family: &EstimatorFamily,
    train_size: usize,
    replicates: usize,
    eval_points: &[f64],
) -> Result<BiasVarianceReport> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_REPLICATES} replicates are required, got {replicates}"
        )));
    }
    if train_size == 0 {
        return Err(Error::InvalidParameter(
            "train_size must be at least 1".into(),
        ));
    }
    if eval_points.is_empty() || eval_points.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "evaluation points must be finite and nonempty".into(),
        ));
    }
    // fail fast on structural ill-posedness before spending the budget
    if family.kind == FamilyKind::Polynomial && train_size <= family.complexity {
        return Err(Error::IllPosedFit(format!(
            "degree {} needs at least {} training points, got {train_size}",
            family.complexity,
            family.complexity + 1
        )));
    }

    let runs = (0..replicates)
        .into_par_iter()
        .map(|i| run_replicate(task, family, train_size, eval_points, i))
        .collect::<Result<Vec<_>>>()?;

    let noise = task.noise_variance();
    let k = eval_points.len() as f64;
    let mut acc = BiasVarianceReport {
        bias2: 0.0,
        variance: 0.0,
        noise,
        mse: 0.0,
        standard_errors: ComponentErrors::default(),
    };
    for (j, &x0) in eval_points.iter().enumerate() {
        let preds: Vec<f64> = runs.iter().map(|r| r.predictions[j]).collect();
        let errs: Vec<f64> = runs.iter().map(|r| r.squared_errors[j]).collect();
        let rep = pointwise_report(task.truth.eval(x0), noise, &preds, &errs);
        acc.bias2 += rep.bias2 / k;
        acc.variance += rep.variance / k;
        acc.mse += rep.mse / k;
        acc.standard_errors.bias2 += rep.standard_errors.bias2 / k;
        acc.standard_errors.variance += rep.standard_errors.variance / k;
        acc.standard_errors.mse += rep.standard_errors.mse / k;
    }
    Ok(acc)
}

/// Monte-Carlo budget and evaluation grid for a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub train_size: usize,
    pub replicates: usize,
    pub eval_points: Vec<f64>,
}

impl SweepConfig {
    /// `points` evenly spaced evaluation points over `[lo, hi]`.
    pub fn with_grid(
        train_size: usize,
        replicates: usize,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> Self {
        let eval_points = match points {
            0 => Vec::new(),
            1 => vec![0.5 * (lo + hi)],
            _ => (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect(),
        };
        Self {
            train_size,
            replicates,
            eval_points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepEntry {
    pub complexity: usize,
    pub report: BiasVarianceReport,
}

fn check_complexities(complexities: &[usize]) -> Result<()> {
    if complexities.is_empty() {
        return Err(Error::InvalidParameter("complexity sweep is empty".into()));
    }
    if complexities.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "complexities must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One decomposition per complexity, keeping failures in place.
pub fn sweep_entries(
    task: &SyntheticTask,
    base_family: &EstimatorFamily,
    complexities: &[usize],
    with_constraint: bool,
    config: &SweepConfig,
) -> Result<Vec<(usize, Result<BiasVarianceReport>)>> {
    check_complexities(complexities)?;
    let family = if with_constraint {
        base_family.clone()
    } else {
        base_family.unconstrained()
    };
    Ok(complexities
        .iter()
        .map(|&c| {
            let res = decompose_averaged(
                task,
                &family.with_complexity(c),
                config.train_size,
                config.replicates,
                &config.eval_points,
            )
            .map_err(|e| Error::AtComplexity {
                complexity: c,
                source: Box::new(e),
            });
            (c, res)
        })
        .collect())
}

/// Decomposition at each complexity; the first failure aborts the sweep.
pub fn hybrid_sweep(
    task: &SyntheticTask,
    base_family: &EstimatorFamily,
    complexities: &[usize],
    with_constraint: bool,
    config: &SweepConfig,
) -> Result<Vec<SweepEntry>> {
    sweep_entries(task, base_family, complexities, with_constraint, config)?
        .into_iter()
        .map(|(complexity, r)| r.map(|report| SweepEntry { complexity, report }))
        .collect()
}

/// Entry with the smallest mse; ties go to the lower complexity.
pub fn min_total_error(sweep: &[SweepEntry]) -> Option<SweepEntry> {
    sweep.iter().copied().reduce(|best, e| {
        if e.report.mse < best.report.mse
            || (e.report.mse == best.report.mse && e.complexity < best.complexity)
        {
            e
        } else {
            best
        }
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant or the lengths differ.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let (ma, mb) = (mean(&ra), mean(&rb));
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_task(truth: Truth, sigma: f64, seed: u64) -> SyntheticTask {
        SyntheticTask::new(
            truth,
            sigma,
            InputDistribution::Uniform { lo: -1.0, hi: 1.0 },
            seed,
        )
        .unwrap()
    }

    fn report(mse: f64) -> BiasVarianceReport {
        BiasVarianceReport {
            bias2: 0.0,
            variance: 0.0,
            noise: 0.0,
            mse,
            standard_errors: ComponentErrors::default(),
        }
    }

    #[test]
    fn exact_estimator_without_noise_is_all_zero() {
        let task = uniform_task(Truth::constant(3.0), 0.0, 1);
        let r = decompose(&task, &EstimatorFamily::fixed(3.0), 5, 200, 0.3).unwrap();
        assert_eq!((r.bias2, r.variance, r.noise, r.mse), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn fixed_zero_against_constant_two() {
        let task = uniform_task(Truth::constant(2.0), 1.0, 7);
        let r = decompose(&task, &EstimatorFamily::fixed(0.0), 5, 20_000, 0.0).unwrap();
        assert_eq!(r.bias2, 4.0);
        assert_eq!(r.variance, 0.0);
        assert_eq!(r.noise, 1.0);
        assert!((r.mse - 5.0).abs() <= 4.0 * r.standard_errors.mse);
        assert!(r.identity_holds(4.0));
    }

    #[test]
    fn too_few_replicates_or_points() {
        let task = uniform_task(Truth::constant(0.0), 1.0, 0);
        assert!(decompose(&task, &EstimatorFamily::sample_mean(), 5, 99, 0.0).is_err());
        assert!(decompose(&task, &EstimatorFamily::sample_mean(), 0, 100, 0.0).is_err());
        assert!(matches!(
            decompose(&task, &EstimatorFamily::polynomial(4), 4, 100, 0.0),
            Err(Error::IllPosedFit(_))
        ));
    }

    #[test]
    fn duplicate_inputs_are_ill_posed() {
        let task = SyntheticTask::new(Truth::constant(0.0), 1.0, InputDistribution::Fixed(0.5), 0)
            .unwrap();
        assert!(matches!(
            decompose(&task, &EstimatorFamily::polynomial(1), 10, 100, 0.0),
            Err(Error::IllPosedFit(_))
        ));
    }

    #[test]
    fn polynomial_fit_recovers_exact_cubic() {
        let xs: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let truth = Truth::Polynomial(vec![0.5, -1.0, 0.0, 2.0]);
        let ys: Vec<f64> = xs.iter().map(|&x| truth.eval(x)).collect();
        let c = fit_polynomial(&xs, &ys, 3).unwrap();
        for (got, want) in c.iter().zip([0.5, -1.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_report() {
        let task = uniform_task(Truth::Polynomial(vec![0.0, -0.5, 0.0, 1.0]), 0.5, 11);
        let fam = EstimatorFamily::polynomial(3);
        let a = decompose(&task, &fam, 20, 500, 0.2).unwrap();
        let b = decompose(&task, &fam, 20, 500, 0.2).unwrap();
        assert_eq!(a, b);
        let c = decompose(&task.with_seed(12), &fam, 20, 500, 0.2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn loose_clamp_changes_nothing() {
        let task = uniform_task(Truth::Polynomial(vec![0.0, 1.0]), 0.1, 5);
        let fam = EstimatorFamily::polynomial(1);
        let clamped = fam
            .clone()
            .with_clamp(OutputClamp::new(-100.0, 100.0).unwrap());
        let a = decompose(&task, &fam, 10, 300, 0.4).unwrap();
        let b = decompose(&task, &clamped, 10, 300, 0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clamp_contracts_predictions() {
        let task = uniform_task(Truth::constant(0.0), 1.0, 3);
        let fam = EstimatorFamily::polynomial(6);
        let clamped = fam.clone().with_clamp(OutputClamp::new(-0.2, 0.2).unwrap());
        let a = decompose(&task, &fam, 10, 500, 0.9).unwrap();
        let b = decompose(&task, &clamped, 10, 500, 0.9).unwrap();
        assert!(b.variance <= a.variance);
    }

    #[test]
    fn min_total_error_picks_smallest_then_lowest_complexity() {
        let sweep = [
            SweepEntry {
                complexity: 0,
                report: report(5.0),
            },
            SweepEntry {
                complexity: 1,
                report: report(2.0),
            },
            SweepEntry {
                complexity: 2,
                report: report(3.0),
            },
        ];
        let best = min_total_error(&sweep).unwrap();
        assert_eq!((best.complexity, best.report.mse), (1, 2.0));

        let tie = [
            SweepEntry {
                complexity: 0,
                report: report(2.0),
            },
            SweepEntry {
                complexity: 1,
                report: report(2.0),
            },
        ];
        assert_eq!(min_total_error(&tie).unwrap().complexity, 0);
        assert!(min_total_error(&[]).is_none());
    }

    #[test]
    fn sweep_validates_and_annotates() {
        let task = uniform_task(Truth::constant(1.0), 0.1, 2);
        let cfg = SweepConfig::with_grid(3, 100, -1.0, 1.0, 3);
        let fam = EstimatorFamily::polynomial(0);
        assert!(hybrid_sweep(&task, &fam, &[], false, &cfg).is_err());
        assert!(hybrid_sweep(&task, &fam, &[2, 1], false, &cfg).is_err());
        match hybrid_sweep(&task, &fam, &[0, 1, 2, 3], false, &cfg) {
            Err(Error::AtComplexity { complexity, source }) => {
                assert_eq!(complexity, 3);
                assert!(matches!(*source, Error::IllPosedFit(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
        let entries = sweep_entries(&task, &fam, &[0, 3], false, &cfg).unwrap();
        assert!(entries[0].1.is_ok());
        assert!(entries[1].1.is_err());
    }

    #[test]
    fn constant_truth_degree_zero_without_noise() {
        let task = uniform_task(Truth::constant(1.5), 0.0, 4);
        let cfg = SweepConfig::with_grid(5, 100, -1.0, 1.0, 5);
        let sweep =
            hybrid_sweep(&task, &EstimatorFamily::polynomial(0), &[0], false, &cfg).unwrap();
        assert!(sweep[0].report.mse.abs() < 1e-24);
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }
}
