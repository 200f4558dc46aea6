use std::path::Path;

use thiserror::Error;

/// Command failure, split by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Numerical(_) => 3,
        }
    }

    /// Prefixes the message with the file it concerns.
    pub fn at(self, path: &Path) -> Self {
        match self {
            Self::Input(m) => Self::Input(format!("{}: {m}", path.display())),
            Self::Numerical(m) => Self::Numerical(format!("{}: {m}", path.display())),
        }
    }
}

impl From<ewtseg_core::Error> for CliError {
    fn from(e: ewtseg_core::Error) -> Self {
        if e.is_numerical() {
            Self::Numerical(e.to_string())
        } else {
            Self::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Input(format!("malformed JSON: {e}"))
    }
}
