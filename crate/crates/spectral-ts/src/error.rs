use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Cholesky factorization failed for {n}x{n} matrix after jitter escalation up to {max_jitter:e}")]
    CholeskyFailed { n: usize, max_jitter: f64 },

    #[error("function value is not finite at x = {x}")]
    NonFiniteValue { x: f64 },

    #[error("objective or gradient is not finite at the start point")]
    NonFiniteObjective,

    #[error("Chebyshev proxy did not resolve the function at degree {degree} on [{lo}, {hi}]")]
    ProxyNotResolved { degree: usize, lo: f64, hi: f64 },

    #[error("all local searches failed: {0}")]
    AllStartsFailed(String),

    #[error("coordinate {dim} = {value} outside [{lo}, {hi}]")]
    OutOfBounds {
        dim: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
