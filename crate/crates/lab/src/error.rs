use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] polyrl_core::Error),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        LabError::Parse {
            path: path.into(),
            msg: msg.to_string(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Core(polyrl_core::Error::InvalidConfig(_)) => 2,
            LabError::Io { .. } | LabError::Parse { .. } => 3,
            LabError::Core(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
