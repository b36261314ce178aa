use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: dlab_core::Error,
    },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("{}: not a result record: {source}", path.display())]
    Record {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("cannot merge records: {0}")]
    Merge(String),

    #[error(transparent)]
    Estimator(#[from] dlab_core::Error),

    #[error("{failed} of {total} checks failed")]
    CheckFailed { failed: usize, total: usize },
}

impl CliError {
    /// 0 success, 2 input error, 3 estimator error, 4 failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Input { .. } | CliError::Usage(_) | CliError::Record { .. } | CliError::Merge(_) => 2,
            CliError::Estimator(_) => 3,
            CliError::CheckFailed { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
