use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("contract error: {0}")]
    Contract(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty dataset: {0}")]
    Empty(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("non-finite score at step {step}")]
    ScoreDivergence { step: usize },

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 validation, 3 numeric divergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_) | Error::Divergence { .. } | Error::ScoreDivergence { .. } => 3,
            Error::Io { .. } | Error::Parse { .. } | Error::Schema(_) => 4,
            _ => 2,
        }
    }

    /// Short machine-parseable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Contract(_) => "contract",
            Error::NonFinite(_) => "non_finite",
            Error::Parameter(_) => "parameter",
            Error::Domain(_) => "domain",
            Error::Empty(_) => "empty",
            Error::Parse { .. } => "parse",
            Error::Schema(_) => "schema",
            Error::Divergence { .. } => "divergence",
            Error::ScoreDivergence { .. } => "score_divergence",
            Error::Validation { .. } => "validation",
            Error::Io { .. } => "io",
        }
    }
}
