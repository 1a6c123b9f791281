use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("insufficient samples: need at least {needed} trials, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric at ({row}, {col}): difference {diff:e}")]
    Asymmetric { row: usize, col: usize, diff: f64 },

    /// Cholesky factorization hit a pivot at or below the positive-definiteness tolerance.
    #[error("covariance is not positive definite: pivot {index} is {pivot:e}")]
    SingularCovariance { index: usize, pivot: f64 },

    /// The mean vector is (numerically) proportional to the ones vector, so no
    /// frontier exists.
    #[error("degenerate frontier: delta = {delta:e}{}", spread_note(.mu_spread))]
    DegenerateFrontier { delta: f64, mu_spread: Option<f64> },

    #[error("target mean {target} is outside the attainable interval [{lo}, {hi}]")]
    Infeasible { target: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ill-posed fit: {0}")]
    IllPosedFit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("problem size {n} exceeds the limit of {limit}")]
    SizeLimit { n: usize, limit: usize },

    #[error("at complexity {complexity}: {source}")]
    AtComplexity {
        complexity: usize,
        #[source]
        source: Box<Error>,
    },
}

fn spread_note(spread: &Option<f64>) -> String {
    match spread {
        Some(s) => format!(" (mean spread max-min = {s:e})"),
        None => String::new(),
    }
}

impl Error {
    /// The innermost error, looking through complexity annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtComplexity { source, .. } => source.root(),
            other => other,
        }
    }
}
