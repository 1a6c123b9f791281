//! Domain types shared by every module: domain tags, performance samples,
//! moment estimates, portfolios and bias-variance reports.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};

/// A weight with magnitude at or below this is a structural zero.
pub const PRESENCE_THRESHOLD: f64 = 1e-12;

/// Tolerance on `Σ w = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

const AI_BIT: u8 = 0b001;
const PHYSICS_BIT: u8 = 0b010;
const EXPERT_BIT: u8 = 0b100;

/// Which construction methods a model draws on.
///
/// The three base domains plus every union of two or three of them. A model
/// carries exactly one tag; composites get the union of their constituents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainTag {
    AI,
    Physics,
    Expert,
    AP,
    AE,
    PE,
    APE,
}

impl DomainTag {
    pub const ALL: [DomainTag; 7] = [
        DomainTag::AI,
        DomainTag::Physics,
        DomainTag::Expert,
        DomainTag::AP,
        DomainTag::AE,
        DomainTag::PE,
        DomainTag::APE,
    ];

    fn bits(self) -> u8 {
        match self {
            DomainTag::AI => AI_BIT,
            DomainTag::Physics => PHYSICS_BIT,
            DomainTag::Expert => EXPERT_BIT,
            DomainTag::AP => AI_BIT | PHYSICS_BIT,
            DomainTag::AE => AI_BIT | EXPERT_BIT,
            DomainTag::PE => PHYSICS_BIT | EXPERT_BIT,
            DomainTag::APE => AI_BIT | PHYSICS_BIT | EXPERT_BIT,
        }
    }

    fn from_bits(bits: u8) -> Option<DomainTag> {
        DomainTag::ALL.into_iter().find(|t| t.bits() == bits)
    }

    pub fn has_ai(self) -> bool {
        self.bits() & AI_BIT != 0
    }

    pub fn has_physics(self) -> bool {
        self.bits() & PHYSICS_BIT != 0
    }

    pub fn has_expert(self) -> bool {
        self.bits() & EXPERT_BIT != 0
    }

    /// Union of the base domains of two tags.
    pub fn union(self, other: DomainTag) -> DomainTag {
        // every nonempty subset of the three bits is a variant
        DomainTag::from_bits(self.bits() | other.bits()).expect("closed under union")
    }

    /// AI combined with physics and/or expert knowledge: AP, AE or APE.
    pub fn is_peai(self) -> bool {
        self.has_ai() && (self.has_physics() || self.has_expert())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DomainTag::AI => "AI",
            DomainTag::Physics => "Physics",
            DomainTag::Expert => "Expert",
            DomainTag::AP => "AP",
            DomainTag::AE => "AE",
            DomainTag::PE => "PE",
            DomainTag::APE => "APE",
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ai" | "a" => Ok(DomainTag::AI),
            "physics" | "p" => Ok(DomainTag::Physics),
            "expert" | "e" => Ok(DomainTag::Expert),
            "ap" => Ok(DomainTag::AP),
            "ae" => Ok(DomainTag::AE),
            "pe" => Ok(DomainTag::PE),
            "ape" => Ok(DomainTag::APE),
            _ => Err(Error::InvalidParameter(format!("unknown domain tag {s:?}"))),
        }
    }
}

/// Domain classification of a weighted composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositeClass {
    pub tag: DomainTag,
    pub peai: bool,
}

/// Union of the domains of every constituent with `|w| > 1e-12`.
pub fn classify_composite(tags: &[DomainTag], weights: &[f64]) -> Result<CompositeClass> {
    if tags.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} tags but {} weights",
            tags.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("weights"));
    }
    check_weight_sum(weights.iter().sum())?;
    let tag = tags
        .iter()
        .zip(weights)
        .filter(|(_, w)| w.abs() > PRESENCE_THRESHOLD)
        .map(|(t, _)| *t)
        .reduce(DomainTag::union)
        .ok_or_else(|| Error::InvalidParameter("no constituent has nonzero weight".into()))?;
    Ok(CompositeClass {
        tag,
        peai: tag.is_peai(),
    })
}

fn check_weight_sum(sum: f64) -> Result<()> {
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "weights sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// T×N matrix of measured performance, one column per model, larger is better.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceSamples {
    values: DMatrix<f64>,
    model_ids: Vec<String>,
    tags: Vec<DomainTag>,
}

impl PerformanceSamples {
    pub fn new(values: DMatrix<f64>, model_ids: Vec<String>, tags: Vec<DomainTag>) -> Result<Self> {
        let (trials, n) = values.shape();
        if n == 0 {
            return Err(Error::Dimension("at least one model is required".into()));
        }
        if trials < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: trials,
            });
        }
        if model_ids.len() != n || tags.len() != n {
            return Err(Error::Dimension(format!(
                "{n} columns but {} ids and {} tags",
                model_ids.len(),
                tags.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("performance samples"));
        }
        Ok(Self {
            values,
            model_ids,
            tags,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn tags(&self) -> &[DomainTag] {
        &self.tags
    }

    pub fn trials(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.values.ncols()
    }
}

/// Mean vector and positive-definite covariance of model performance.
///
/// Holds the Cholesky factor of `omega` so every `Ω⁻¹ b` is a pair of
/// triangular solves.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    mu: DVector<f64>,
    omega: DMatrix<f64>,
    chol: Cholesky,
}

impl MomentEstimate {
    pub fn new(mu: DVector<f64>, omega: DMatrix<f64>) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::Dimension("empty mean vector".into()));
        }
        if omega.nrows() != omega.ncols() {
            return Err(Error::NotSquare {
                rows: omega.nrows(),
                cols: omega.ncols(),
            });
        }
        if omega.nrows() != n {
            return Err(Error::Dimension(format!(
                "mean has length {n} but covariance is {}x{}",
                omega.nrows(),
                omega.ncols()
            )));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean vector"));
        }
        if omega.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance matrix"));
        }
        let chol = Cholesky::new(&omega)?;
        Ok(Self { mu, omega, chol })
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn n_models(&self) -> usize {
        self.mu.len()
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    /// `Ω⁻¹ b` via the stored factor.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn variance_of(&self, weights: &DVector<f64>) -> f64 {
        linalg::quadratic_form(&self.omega, weights)
    }

    pub fn mean_of(&self, weights: &DVector<f64>) -> f64 {
        self.mu.dot(weights)
    }

    pub fn mu_range(&self) -> (f64, f64) {
        (self.mu.min(), self.mu.max())
    }

    /// Restriction to the models at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let n = self.n_models();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Dimension(format!(
                "index {bad} out of range for {n} models"
            )));
        }
        let mu = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.mu[i]));
        let omega = DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
            self.omega[(indices[r], indices[c])]
        });
        Self::new(mu, omega)
    }
}

/// α = 1ᵀΩ⁻¹1, β = 1ᵀΩ⁻¹μ, γ = μᵀΩ⁻¹μ and δ = αγ − β².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierScalars {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl FrontierScalars {
    /// Relative threshold below which `δ` counts as zero.
    pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

    pub fn is_degenerate(&self) -> bool {
        !(self.delta > Self::DEGENERACY_TOLERANCE * self.alpha * self.gamma) || !(self.alpha > 0.0)
    }

    pub(crate) fn ensure_nondegenerate(&self, mu_spread: Option<f64>) -> Result<()> {
        if self.is_degenerate() {
            return Err(Error::DegenerateFrontier {
                delta: self.delta,
                mu_spread,
            });
        }
        Ok(())
    }
}

/// Composite weights together with the mean and variance they achieve.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    weights: DVector<f64>,
    mu_c: f64,
    sigma2_c: f64,
}

impl Portfolio {
    /// Evaluates `weights` against `moments`. The weights must sum to one.
    pub fn evaluate(moments: &MomentEstimate, weights: DVector<f64>) -> Result<Self> {
        if weights.len() != moments.n_models() {
            return Err(Error::Dimension(format!(
                "{} weights for {} models",
                weights.len(),
                moments.n_models()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
        check_weight_sum(weights.sum())?;
        Ok(Self {
            mu_c: moments.mean_of(&weights),
            sigma2_c: moments.variance_of(&weights),
            weights,
        })
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn mu_c(&self) -> f64 {
        self.mu_c
    }

    pub fn sigma2_c(&self) -> f64 {
        self.sigma2_c
    }

    /// True when any weight is negative beyond round-off.
    pub fn has_short_position(&self) -> bool {
        self.weights.iter().any(|&w| w < -PRESENCE_THRESHOLD)
    }

    pub fn classify(&self, tags: &[DomainTag]) -> Result<CompositeClass> {
        classify_composite(tags, self.weights.as_slice())
    }
}

/// Monte-Carlo standard errors of the four decomposition terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentErrors {
    pub bias2: f64,
    pub variance: f64,
    pub noise: f64,
    pub mse: f64,
}

/// Squared bias, estimator variance, noise and mean squared error for one
/// estimator on one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasVarianceReport {
    pub bias2: f64,
    pub variance: f64,
    pub noise: f64,
    pub mse: f64,
    pub standard_errors: ComponentErrors,
}

impl BiasVarianceReport {
    /// `mse − (bias² + variance + noise)`.
    pub fn identity_residual(&self) -> f64 {
        self.mse - (self.bias2 + self.variance + self.noise)
    }

    /// Root-sum-square of the four standard errors.
    pub fn combined_standard_error(&self) -> f64 {
        let se = &self.standard_errors;
        (se.bias2 * se.bias2 + se.variance * se.variance + se.noise * se.noise + se.mse * se.mse)
            .sqrt()
    }

    pub fn identity_holds(&self, k: f64) -> bool {
        self.identity_residual().abs() <= k * self.combined_standard_error()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ai_with_physics_is_peai() {
        let c = classify_composite(&[DomainTag::AI, DomainTag::Physics], &[0.5, 0.5]).unwrap();
        assert_eq!(c.tag, DomainTag::AP);
        assert!(c.peai);
    }

    #[test]
    fn zero_weight_constituent_is_excluded() {
        let c = classify_composite(&[DomainTag::AI, DomainTag::Physics], &[1.0, 0.0]).unwrap();
        assert_eq!(c.tag, DomainTag::AI);
        assert!(!c.peai);
    }

    #[test]
    fn all_three_domains() {
        let third = 1.0 / 3.0;
        let c = classify_composite(
            &[DomainTag::AI, DomainTag::Physics, DomainTag::Expert],
            &[third, third, third],
        )
        .unwrap();
        assert_eq!(c.tag, DomainTag::APE);
        assert!(c.peai);
    }

    #[test]
    fn physics_expert_is_not_peai() {
        let c = classify_composite(&[DomainTag::Physics, DomainTag::Expert], &[0.3, 0.7]).unwrap();
        assert_eq!(c.tag, DomainTag::PE);
        assert!(!c.peai);
    }

    #[test]
    fn composite_constituents_contribute_all_their_domains() {
        let c = classify_composite(&[DomainTag::PE, DomainTag::AI], &[0.2, 0.8]).unwrap();
        assert_eq!(c.tag, DomainTag::APE);
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        assert!(matches!(
            classify_composite(&[DomainTag::AI], &[0.5, 0.5]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn tag_names_round_trip() {
        for t in DomainTag::ALL {
            assert_eq!(t.as_str().parse::<DomainTag>().unwrap(), t);
        }
        assert!("robot".parse::<DomainTag>().is_err());
    }

    #[test]
    fn constructors_reject_non_finite() {
        let v = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert_eq!(
            PerformanceSamples::new(v, vec!["m".into()], vec![DomainTag::AI]),
            Err(Error::NonFinite("performance samples"))
        );
        let mu = DVector::from_vec(vec![1.0, f64::INFINITY]);
        assert!(matches!(
            MomentEstimate::new(mu, DMatrix::identity(2, 2)),
            Err(Error::NonFinite(_))
        ));
        let m = MomentEstimate::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::identity(2, 2))
            .unwrap();
        assert!(matches!(
            Portfolio::evaluate(&m, DVector::from_vec(vec![f64::NAN, 1.0])),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn samples_need_two_trials() {
        let v = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert_eq!(
            PerformanceSamples::new(v, vec!["a".into(), "b".into()], vec![DomainTag::AI; 2]),
            Err(Error::InsufficientSamples { needed: 2, got: 1 })
        );
    }

    #[test]
    fn portfolio_requires_unit_sum() {
        let m = MomentEstimate::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::identity(2, 2))
            .unwrap();
        assert!(Portfolio::evaluate(&m, DVector::from_vec(vec![0.5, 0.6])).is_err());
        let p = Portfolio::evaluate(&m, DVector::from_vec(vec![-0.5, 1.5])).unwrap();
        assert!(p.has_short_position());
        assert_eq!(p.mu_c(), 2.5);
        assert_eq!(p.sigma2_c(), 2.5);
    }

    fn tag_strategy() -> impl Strategy<Value = DomainTag> {
        prop::sample::select(DomainTag::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn classification_is_permutation_invariant(
            pairs in prop::collection::vec((tag_strategy(), 0.0f64..1.0), 1..7),
            rotate in 0usize..7,
        ) {
            let total: f64 = pairs.iter().map(|p| p.1).sum();
            prop_assume!(total > 1e-3);
            let tags: Vec<_> = pairs.iter().map(|p| p.0).collect();
            let weights: Vec<_> = pairs.iter().map(|p| p.1 / total).collect();
            let base = classify_composite(&tags, &weights);

            let mut shuffled: Vec<_> = tags.iter().copied().zip(weights.iter().copied()).collect();
            let k = rotate % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let (t2, w2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            prop_assert_eq!(base, classify_composite(&t2, &w2));
        }
    }
}
