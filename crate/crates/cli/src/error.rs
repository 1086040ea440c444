use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("{0}")]
    Missing(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] perfopt::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for bad input, 3 for a budget too small to run.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) | HarnessError::Missing(_) => 2,
            HarnessError::Core(perfopt::Error::BudgetTooSmall { .. }) => 3,
            HarnessError::Core(perfopt::Error::InvalidInput(_)) => 2,
            HarnessError::Core(_) | HarnessError::Io { .. } => 1,
        }
    }
}
