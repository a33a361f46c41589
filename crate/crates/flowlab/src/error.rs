use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("non-finite loss at index {index}: {value}")]
    NonFiniteLoss { index: usize, value: f64 },

    #[error("negative loss at index {index}: {value}")]
    NegativeLoss { index: usize, value: f64 },

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("all weights are zero; raise the temperature")]
    AllZeroWeights,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("{what} out of range: {value} (expected {expected})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("gradient descent diverged at step {step}")]
    DivergenceDetected { step: usize },

    #[error("model has no head for task {0:?}")]
    MissingHead(String),

    #[error("model architectures do not match: {0}")]
    ArchitectureMismatch(String),

    #[error("non-finite gradient encountered at epoch {epoch}")]
    NonFiniteGradient { epoch: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
