use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrand produced a non-finite value {value} at x = {at}")]
    NonFiniteIntegrand { at: f64, value: f64 },

    #[error("quadrature did not converge: error estimate {error:e} after {evaluations} evaluations")]
    NoConvergence { error: f64, evaluations: usize },

    #[error("invalid bracket [{lo}, {hi}]: function values do not straddle the target")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rejection envelope failed: {0}")]
    Envelope(String),

    #[error("empty sample batch")]
    EmptyBatch,

    #[error("triple ({a}, {b}, {c}) is not on the curve grid")]
    OffGrid { a: f64, b: f64, c: f64 },

    #[error("model specification: {0}")]
    ModelSpec(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
