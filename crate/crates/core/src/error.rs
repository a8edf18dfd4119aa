use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum QucError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("radial profile violates the ellipticity-ratio bound at t = {t}: t G''/G' = {ratio} outside [{lower}, {upper}]")]
    ProfileRatio { t: f64, ratio: f64, lower: f64, upper: f64 },

    #[error("{context}: no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { context: String, iterations: usize, residual: f64 },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bracket expansion failed for {context}")]
    Bracket { context: String },

    #[error("inconsistent measurement: {0}")]
    Inconsistent(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QucError>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> QucError {
    QucError::InvalidParameter { name: name.to_string(), reason: reason.into() }
}
