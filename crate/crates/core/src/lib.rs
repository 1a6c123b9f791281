//! Minimum-variance composites of AI, physics and expert models.
//!
//! Each model's measured performance is treated like a risky asset: given the
//! mean vector `μ` and covariance `Ω` of performance across trials, the
//! [`frontier`] module finds the weights that minimize composite variance for
//! a target mean, in closed form. [`oracle`] holds brute-force minimizers that
//! check those results independently, and [`biasvar`] measures the
//! bias-variance split of constrained versus unconstrained estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biasvar;
pub mod error;
pub mod estimation;
pub mod frontier;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    classify_composite, BiasVarianceReport, ComponentErrors, CompositeClass, DomainTag,
    FrontierScalars, MomentEstimate, PerformanceSamples, Portfolio,
};
