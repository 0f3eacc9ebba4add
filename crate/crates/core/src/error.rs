use thiserror::Error;

use crate::qstate::Tag;

/// Errors raised by the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("subsystem tag {0:?} appears more than once")]
    TagCollision(Tag),

    #[error("unknown subsystem tag {0:?}")]
    UnknownTag(Tag),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("operator is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("state is not normalised (norm {0})")]
    NotNormalized(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("unsupported rotation angle {0} (only ±π/2 are implemented)")]
    UnsupportedAngle(f64),

    #[error("operation requires {0} mode")]
    WrongMode(&'static str),

    #[error("missing measurement setting {0}")]
    MissingSetting(String),

    #[error("count table: {0}")]
    CountTable(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
