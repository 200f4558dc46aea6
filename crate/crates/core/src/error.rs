use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("mask generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(expected: impl std::fmt::Display, found: impl std::fmt::Display) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for failures caused by the numbers rather than by the caller.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::Numerical(_) | Error::GenerationFailed { .. }
        )
    }
}
