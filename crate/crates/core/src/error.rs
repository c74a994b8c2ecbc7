use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("power iteration did not converge (last estimate {estimate:e})")]
    PowerIterationNotConverged { estimate: f64 },

    #[error("insufficient strong convexity: need 3σ > 2L, got σ = {sigma}, L = {lipschitz}")]
    InsufficientStrongConvexity { sigma: f64, lipschitz: f64 },

    #[error("shift destroys prox well-posedness: α·γ = {product} ≥ 1")]
    ShiftIllPosed { product: f64 },

    #[error("function value is infinite at {0}")]
    InfiniteValue(&'static str),

    #[error("no step has been taken yet")]
    NoStep,

    #[error("ergodic average over zero iterates")]
    EmptyAverage,

    #[error("function value must be nonnegative, got {0:e}")]
    NegativeValue(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
