use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(ergotransport::Error),
    #[error("{}: malformed results file: {reason}", path.display())]
    Malformed { path: PathBuf, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) | CliError::Malformed { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Configuration errors are usage errors; everything else happened while
    /// running.
    pub(crate) fn from_config(e: ergotransport::Error) -> CliError {
        use ergotransport::Error as E;
        match e {
            E::InvalidArgument(_) | E::UnsupportedDimension { .. } | E::OutOfDomain { .. } | E::Shape { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other),
        }
    }
}

impl From<ergotransport::Error> for CliError {
    fn from(e: ergotransport::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
