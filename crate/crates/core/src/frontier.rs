//! Closed-form minimum-variance composites.
//!
//! For a target mean `μ_C` the weights minimizing `wᵀΩw` subject to
//! `1ᵀw = 1` and `μᵀw = μ_C` are
//!
//! ```text
//! w* = Ω⁻¹(λ₁·1 + λ₂·μ),   λ₁ = (γ − β·μ_C)/δ,   λ₂ = (α·μ_C − β)/δ
//! ```
//!
//! and the achieved variance is `λ₁ + λ₂·μ_C = (α·μ_C² − 2β·μ_C + γ)/δ`.
//! Every `Ω⁻¹` application goes through the Cholesky factor held by
//! [`MomentEstimate`]. The equality-only solution may contain negative weights;
//! [`long_only_weights`] adds `w ≥ 0`.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FrontierScalars, MomentEstimate, Portfolio};

/// Default number of points in a traced frontier.
pub const DEFAULT_TRACE_POINTS: usize = 100;

/// Weights below this are pinned by the long-only solver.
pub const LONG_ONLY_TOLERANCE: f64 = 1e-10;

/// A point on the minimum-variance curve.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub mu_c: f64,
    /// Closed-form frontier variance at `mu_c`.
    pub sigma2_c: f64,
    pub portfolio: Portfolio,
}

/// Frontier points ordered by target mean, plus the interval
/// `[min μ_i, max μ_i]` spanned by the individual models.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierTrace {
    pub points: Vec<FrontierPoint>,
    pub segment: (f64, f64),
}

impl FrontierTrace {
    pub fn in_segment(&self, mu_c: f64) -> bool {
        mu_c >= self.segment.0 && mu_c <= self.segment.1
    }
}

/// Equal-weight ensemble and its distance above the frontier.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformEnsemble {
    pub portfolio: Portfolio,
    /// `wᵀΩw − frontier_variance(μᵀw)`; `None` when the frontier is degenerate.
    pub gap: Option<f64>,
}

/// Where a `(μ_C, σ_C²)` pair sits relative to the feasible region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLocation {
    /// Below the minimum-variance curve: no composite attains it.
    Infeasible,
    /// On the curve within tolerance.
    Frontier,
    /// Strictly above the curve: attainable but suboptimal.
    Interior,
}

fn mu_spread(moments: &MomentEstimate) -> f64 {
    let (lo, hi) = moments.mu_range();
    hi - lo
}

/// α, β, γ, δ computed with two solves against Ω.
///
/// Fails with [`Error::DegenerateFrontier`] when `δ ≤ 1e-10·α·γ`.
pub fn frontier_scalars(moments: &MomentEstimate) -> Result<FrontierScalars> {
    let scalars = raw_scalars(moments);
    scalars.ensure_nondegenerate(Some(mu_spread(moments)))?;
    Ok(scalars)
}

fn raw_scalars(moments: &MomentEstimate) -> FrontierScalars {
    let n = moments.n_models();
    let ones = DVector::from_element(n, 1.0);
    let inv_ones = moments.solve(&ones);
    let inv_mu = moments.solve(moments.mu());
    let alpha = inv_ones.sum();
    let beta = inv_mu.sum();
    let gamma = moments.mu().dot(&inv_mu);
    FrontierScalars {
        alpha,
        beta,
        gamma,
        delta: alpha * gamma - beta * beta,
    }
}

/// `(λ₁, λ₂)` for the target mean `mu_c`.
pub fn lagrange_multipliers(scalars: &FrontierScalars, mu_c: f64) -> Result<(f64, f64)> {
    scalars.ensure_nondegenerate(None)?;
    let FrontierScalars {
        alpha,
        beta,
        gamma,
        delta,
    } = *scalars;
    Ok(((gamma - beta * mu_c) / delta, (alpha * mu_c - beta) / delta))
}

/// `(α·μ_C² − 2β·μ_C + γ)/δ`.
pub fn frontier_variance(scalars: &FrontierScalars, mu_c: f64) -> Result<f64> {
    scalars.ensure_nondegenerate(None)?;
    let FrontierScalars {
        alpha,
        beta,
        gamma,
        delta,
    } = *scalars;
    Ok((alpha * mu_c * mu_c - 2.0 * beta * mu_c + gamma) / delta)
}

/// Minimum-variance weights for target mean `mu_c`, short positions allowed.
pub fn optimal_weights(moments: &MomentEstimate, mu_c: f64) -> Result<Portfolio> {
    let scalars = frontier_scalars(moments)?;
    optimal_weights_with(moments, &scalars, mu_c)
}

fn optimal_weights_with(
    moments: &MomentEstimate,
    scalars: &FrontierScalars,
    mu_c: f64,
) -> Result<Portfolio> {
    if !mu_c.is_finite() {
        return Err(Error::NonFinite("target mean"));
    }
    let (l1, l2) = lagrange_multipliers(scalars, mu_c)?;
    let rhs = moments.mu().map(|m| l1 + l2 * m);
    let weights = moments.solve(&rhs);
    Portfolio::evaluate(moments, weights)
}

/// Vertex of the frontier parabola: `μ = β/α`, `σ² = 1/α`, `w = Ω⁻¹1/α`.
pub fn global_minimum_variance(moments: &MomentEstimate) -> Result<FrontierPoint> {
    let scalars = frontier_scalars(moments)?;
    let ones = DVector::from_element(moments.n_models(), 1.0);
    let weights = moments.solve(&ones) / scalars.alpha;
    let portfolio = Portfolio::evaluate(moments, weights)?;
    Ok(FrontierPoint {
        mu_c: scalars.beta / scalars.alpha,
        sigma2_c: 1.0 / scalars.alpha,
        portfolio,
    })
}

/// Evenly spaced frontier points over `[mu_lo, mu_hi]`, endpoints included.
///
/// Points are evaluated in parallel; the output is always in grid order.
pub fn trace_frontier(
    moments: &MomentEstimate,
    mu_lo: f64,
    mu_hi: f64,
    points: usize,
) -> Result<FrontierTrace> {
    if !(mu_lo.is_finite() && mu_hi.is_finite()) {
        return Err(Error::NonFinite("frontier range"));
    }
    if !(mu_lo < mu_hi) {
        return Err(Error::InvalidParameter(format!(
            "frontier range requires lo < hi, got [{mu_lo}, {mu_hi}]"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidParameter(format!(
            "at least 2 frontier points are required, got {points}"
        )));
    }
    let scalars = frontier_scalars(moments)?;
    let step = (mu_hi - mu_lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points)
        .map(|i| {
            if i == points - 1 {
                mu_hi
            } else {
                mu_lo + step * i as f64
            }
        })
        .collect();
    let points = grid
        .par_iter()
        .map(|&mu_c| {
            Ok(FrontierPoint {
                mu_c,
                sigma2_c: frontier_variance(&scalars, mu_c)?,
                portfolio: optimal_weights_with(moments, &scalars, mu_c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrontierTrace {
        points,
        segment: moments.mu_range(),
    })
}

/// [`trace_frontier`] over `[min μ_i, max μ_i]` with the default point count.
pub fn trace_default(moments: &MomentEstimate) -> Result<FrontierTrace> {
    let (lo, hi) = moments.mu_range();
    trace_frontier(moments, lo, hi, DEFAULT_TRACE_POINTS)
}

/// Equal weights `1/N` and their gap above the frontier at the same mean.
pub fn uniform_ensemble(moments: &MomentEstimate) -> Result<UniformEnsemble> {
    let n = moments.n_models();
    let weights = DVector::from_element(n, 1.0 / n as f64);
    let portfolio = Portfolio::evaluate(moments, weights)?;
    let scalars = raw_scalars(moments);
    let gap = if scalars.is_degenerate() {
        None
    } else {
        Some(portfolio.sigma2_c() - frontier_variance(&scalars, portfolio.mu_c())?)
    };
    Ok(UniformEnsemble { portfolio, gap })
}

/// Classifies a `(mean, variance)` pair against the frontier curve. `tol` is
/// relative to the frontier variance at `mu_c`.
pub fn locate_point(
    scalars: &FrontierScalars,
    mu_c: f64,
    sigma2_c: f64,
    tol: f64,
) -> Result<RegionLocation> {
    let frontier = frontier_variance(scalars, mu_c)?;
    let slack = tol * frontier.abs();
    Ok(if sigma2_c < frontier - slack {
        RegionLocation::Infeasible
    } else if sigma2_c <= frontier + slack {
        RegionLocation::Frontier
    } else {
        RegionLocation::Interior
    })
}

/// Minimum-variance weights with the additional constraint `w ≥ 0`.
///
/// Starts from the equality-only solution and returns it untouched when it is
/// already nonnegative. Otherwise the most negative weight is pinned to zero
/// and the problem re-solved on the remaining models until no weight is below
/// `-1e-10`. The pinned point is then polished by a primal active-set loop that
/// releases any pinned model whose multiplier shows it should re-enter, so the
/// result satisfies the full KKT conditions.
pub fn long_only_weights(moments: &MomentEstimate, mu_c: f64) -> Result<Portfolio> {
    if !mu_c.is_finite() {
        return Err(Error::NonFinite("target mean"));
    }
    let (lo, hi) = moments.mu_range();
    if mu_c < lo || mu_c > hi {
        return Err(Error::Infeasible {
            target: mu_c,
            lo,
            hi,
        });
    }
    let n = moments.n_models();

    let unconstrained = optimal_weights(moments, mu_c)?;
    if unconstrained
        .weights()
        .iter()
        .all(|&w| w >= -LONG_ONLY_TOLERANCE)
    {
        return Ok(unconstrained);
    }

    let start = pin_negative_weights(moments, mu_c, unconstrained.weights().clone())
        .unwrap_or_else(|_| hull_start(moments, mu_c));

    let weights = active_set(moments, mu_c, start)?;
    debug_assert_eq!(weights.len(), n);
    Portfolio::evaluate(moments, weights)
}

// Repeatedly zero the most negative weight and re-solve on the rest.
fn pin_negative_weights(
    moments: &MomentEstimate,
    mu_c: f64,
    mut weights: DVector<f64>,
) -> Result<DVector<f64>> {
    let n = moments.n_models();
    let mut support: Vec<usize> = (0..n).collect();
    for _ in 0..n {
        let worst = support
            .iter()
            .copied()
            .filter(|&i| weights[i] < -LONG_ONLY_TOLERANCE)
            .min_by(|&a, &b| weights[a].total_cmp(&weights[b]));
        let Some(worst) = worst else {
            return Ok(weights);
        };
        support.retain(|&i| i != worst);
        if support.is_empty() {
            return Err(Error::Numerical("long-only support became empty".into()));
        }
        weights = face_solution(moments, mu_c, &support)?.0;
    }
    Err(Error::Numerical("pinning did not converge".into()))
}

// Two-model mix spanning mu_c: always feasible when mu_c is in the hull.
fn hull_start(moments: &MomentEstimate, mu_c: f64) -> DVector<f64> {
    let mu = moments.mu();
    let lo = mu.imin();
    let hi = mu.imax();
    let mut w = DVector::zeros(moments.n_models());
    if mu[hi] - mu[lo] <= 0.0 {
        w[lo] = 1.0;
    } else {
        let t = (mu_c - mu[lo]) / (mu[hi] - mu[lo]);
        w[lo] = 1.0 - t;
        w[hi] += t;
    }
    w
}

// Minimizer over the face where only `support` may be nonzero, with its
// multipliers (λ₁, λ₂). Uses the closed form on the sub-problem; when μ is
// constant on the support the mean constraint is redundant and the face's
// minimum-variance point is returned instead.
fn face_solution(
    moments: &MomentEstimate,
    mu_c: f64,
    support: &[usize],
) -> Result<(DVector<f64>, f64, f64)> {
    let sub = moments.subset(support)?;
    let scalars = raw_scalars(&sub);
    let (sub_w, l1, l2) = if scalars.is_degenerate() {
        let (lo, hi) = sub.mu_range();
        let scale = 1.0 + lo.abs().max(hi.abs());
        if (mu_c - lo).abs() > 1e-9 * scale || (mu_c - hi).abs() > 1e-9 * scale {
            return Err(Error::Infeasible {
                target: mu_c,
                lo,
                hi,
            });
        }
        let ones = DVector::from_element(sub.n_models(), 1.0);
        (sub.solve(&ones) / scalars.alpha, 1.0 / scalars.alpha, 0.0)
    } else {
        let (l1, l2) = lagrange_multipliers(&scalars, mu_c)?;
        (sub.solve(&sub.mu().map(|m| l1 + l2 * m)), l1, l2)
    };
    let mut w = DVector::zeros(moments.n_models());
    for (k, &i) in support.iter().enumerate() {
        w[i] = sub_w[k];
    }
    Ok((w, l1, l2))
}

// Primal active-set iteration from a feasible start. The working set holds
// the indices pinned at zero.
fn active_set(moments: &MomentEstimate, mu_c: f64, start: DVector<f64>) -> Result<DVector<f64>> {
    let n = moments.n_models();
    let mut w = start;
    let mut pinned: Vec<bool> = w.iter().map(|&x| x <= LONG_ONLY_TOLERANCE).collect();
    for (i, p) in pinned.iter().enumerate() {
        if *p {
            w[i] = 0.0;
        }
    }
    let max_iter = 10 * n + 50;
    for _ in 0..max_iter {
        let support: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
        if support.is_empty() {
            return Err(Error::Numerical("long-only support became empty".into()));
        }
        let (target, l1, l2) = face_solution(moments, mu_c, &support)?;
        let step = &target - &w;
        let scale = 1.0 + w.amax();
        if step.amax() <= 1e-13 * scale {
            // stationary on this face: check multipliers of the pinned set
            let grad = moments.omega() * &target;
            let g_scale = 1.0 + grad.amax();
            let release = (0..n)
                .filter(|&i| pinned[i])
                .map(|i| (i, grad[i] - l1 - l2 * moments.mu()[i]))
                .filter(|&(_, nu)| nu < -1e-10 * g_scale)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match release {
                None => return Ok(target),
                Some((i, _)) => {
                    pinned[i] = false;
                    w = target;
                    continue;
                }
            }
        }
        // ratio test against the free weights heading below zero
        let mut t = 1.0;
        let mut blocking = None;
        for &i in &support {
            if step[i] < 0.0 {
                let ratio = (w[i] / -step[i]).max(0.0);
                if ratio < t {
                    t = ratio;
                    blocking = Some(i);
                }
            }
        }
        match blocking {
            None => w = target,
            Some(b) => {
                w += step * t;
                w[b] = 0.0;
                pinned[b] = true;
            }
        }
    }
    Err(Error::Numerical(format!(
        "long-only active set did not converge in {max_iter} iterations"
    )))
}
