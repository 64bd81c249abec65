use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed input line. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed input that violates a data invariant.
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Lookup(String),

    #[error("training failed: {0}")]
    Training(String),

    /// A caller broke an operation precondition (bad fraction, rating mismatch, ...).
    #[error("{0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
