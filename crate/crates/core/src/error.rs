use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GofError {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("value {value} lies outside the support of the null model")]
    OutsideSupport { value: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("non-finite sample value at position {index}")]
    NonFinite { index: usize },

    #[error("empty interval: {0}")]
    EmptyInterval(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("quantile table does not match the statistic: {0}")]
    TableMismatch(String),

    #[error("no critical value available: {0}")]
    MissingCriticalValue(String),

    #[error("table format error: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GofError>;

impl From<std::io::Error> for GofError {
    fn from(e: std::io::Error) -> Self {
        GofError::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> GofError {
    GofError::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
