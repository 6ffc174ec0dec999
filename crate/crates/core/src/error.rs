use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight sequence: {0}")]
    InvalidSequence(String),

    #[error("horizon {horizon} too small: {what}")]
    Horizon { horizon: usize, what: String },

    #[error("condition {condition} violated at index {index}")]
    ConditionViolated {
        condition: &'static str,
        index: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
