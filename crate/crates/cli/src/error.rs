use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: rsblr::Error,
    },

    #[error("{0}")]
    Data(String),

    /// A re-run or audit disagreed with a recorded report.
    #[error("verification failed: {0}")]
    Mismatch(String),
}

impl CliError {
    /// 1 usage, 2 data, 3 numerical failure or failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core { source, .. } if source.is_numerical() => 3,
            CliError::Core { .. } | CliError::Data(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for rsblr::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}
