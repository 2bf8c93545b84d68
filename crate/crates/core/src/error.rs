//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by the screening pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented precondition (bad hyperparameter,
    /// out-of-range input, inconsistent configuration).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Shapes of two related objects disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Triangular factorization failed even after the jitter escalation.
    #[error(
        "covariance factorization failed after jitter escalation \
         (n = {n}, last jitter = {last_jitter:e})"
    )]
    FactorizationFailed { n: usize, last_jitter: f64 },

    /// A warmup chain is too short to estimate a proposal covariance.
    #[error("chain of length {len} is too short for dimension {dim} (need at least dim + 2)")]
    ChainTooShort { len: usize, dim: usize },

    /// The chain holds no draws.
    #[error("empty chain")]
    EmptyChain,

    /// The computer model could not be evaluated.
    #[error("computer model evaluation failed: {0}")]
    ModelEvaluation(String),

    /// The emulator fit did not converge from any restart.
    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    /// Exhaustive model enumeration is capped.
    #[error("model enumeration requires p <= {cap} inputs, got p = {p}")]
    EnumerationCap { p: usize, cap: usize },

    /// Unknown scenario identifier.
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// A file did not match the expected schema.
    #[error("file format error in {path}: {reason}")]
    FileFormat { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn dim(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
