use thiserror::Error;

/// Errors raised by the GP engine, environments and bandit drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel parameter `{name}` = {value}: must be finite and positive")]
    InvalidKernelParameter { name: &'static str, value: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite observation {0}")]
    NonFiniteObservation(f64),

    #[error(
        "Gram matrix is numerically singular at row {row} (pivot {pivot:e}); \
         retry with a larger jitter or a positive noise variance"
    )]
    SingularGram { row: usize, pivot: f64 },

    #[error("grid of {size} points exceeds the dense sampling limit of {limit}; reduce grid_res")]
    GridTooLarge { size: usize, limit: usize },

    #[error("point {0:?} lies outside the domain")]
    OutOfDomain(Vec<f64>),

    #[error("query at {0:?} is not on the environment's sample grid")]
    OffGrid(Vec<f64>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
