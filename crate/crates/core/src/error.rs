use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An input object that violates its own invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// The operation does not support this covariance variant.
    #[error("unsupported covariance variant: {0}")]
    Unsupported(String),

    /// A path left the divergence guard.
    #[error("path diverged at step {step}: L2 norm {norm:e}")]
    Divergence { step: usize, norm: f64 },

    /// Too many replications of an ensemble diverged.
    #[error("{diverged} of {total} replications diverged (limit 1%)")]
    DivergenceRate { diverged: usize, total: usize },

    /// A parameter outside the hypotheses of the bound being checked.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Configuration parsing or schema errors.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}
