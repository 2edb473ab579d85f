use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Config(String),

    #[error("non-finite value in channel {channel} at row {row}")]
    NonFinite { channel: usize, row: usize },

    #[error("{0}")]
    Shape(String),

    #[error("{0}")]
    Numeric(String),

    #[error("{0}")]
    UndefinedCorrelation(String),

    #[error("{0}")]
    Selection(String),

    #[error("{0}")]
    Window(String),

    #[error("{0}")]
    Split(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-parsable class name, used as the CLI error prefix.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::NonFinite { .. } => "data",
            Error::Shape(_) => "shape",
            Error::Numeric(_) => "numeric",
            Error::UndefinedCorrelation(_) => "undefined-correlation",
            Error::Selection(_) => "selection",
            Error::Window(_) => "window",
            Error::Split(_) => "split",
            Error::Parse { .. } => "parse",
            Error::Usage(_) => "usage",
            Error::Training { .. } => "training",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
