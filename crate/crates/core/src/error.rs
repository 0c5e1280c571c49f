use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed header: missing required column `{missing}`")]
    MalformedHeader { missing: String },

    #[error("unknown product `{name}`")]
    UnknownProduct { name: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("confidence is undefined: no basket contains `{product}`")]
    UndefinedConditional { product: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid basket: {0}")]
    InvalidBasket(String),

    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the filesystem rather than by content.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}
