use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Load {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("referential integrity: {0}")]
    Integrity(String),

    #[error("unknown item id `{0}`")]
    Lookup(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("external model: {0}")]
    External(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Process exit code: 2 for bad inputs, 3 for anything that broke mid-run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Load { .. } | Error::Integrity(_) | Error::Validation(_) => 2,
            Error::Stage { source, .. } => match source.as_ref() {
                Error::Load { .. } | Error::Integrity(_) | Error::Validation(_) => 2,
                _ => 3,
            },
            _ => 3,
        }
    }
}
