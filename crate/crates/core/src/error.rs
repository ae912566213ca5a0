use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("infeasible corpus spec: {0}")]
    Infeasible(String),

    /// No year exists at which the question's answer changes.
    #[error("contrastive transform unavailable for question {0}")]
    TransformUnavailable(String),

    #[error("unknown template {template_id} for relation {relation}")]
    UnknownTemplate { relation: String, template_id: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for the CLI: 1 usage, 2 validation, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Io { .. } => 1,
            Error::Numerical(_) => 3,
            Error::Validation(_)
            | Error::Parse { .. }
            | Error::Infeasible(_)
            | Error::TransformUnavailable(_)
            | Error::UnknownTemplate { .. }
            | Error::Dimension(_)
            | Error::Checkpoint { .. } => 2,
        }
    }
}
