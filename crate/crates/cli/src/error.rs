use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] pcflow::Error),
}

impl CliError {
    pub fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 2 usage, 3 unreadable or inconsistent input, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input { .. } => 3,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(pcflow::Error::InvalidConfig(_) | pcflow::Error::InvalidArgument(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}
