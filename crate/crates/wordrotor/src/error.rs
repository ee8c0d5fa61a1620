use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{context}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("{context}: zero-norm vector")]
    ZeroNorm { context: String },

    #[error("{context}: zero variance")]
    ZeroVariance { context: String },

    #[error("{context}: non-finite value")]
    NonFinite { context: String },

    #[error("{context}: empty input")]
    Empty { context: String },

    #[error("sentence has no usable tokens: {context}")]
    EmptyBag { context: String },

    #[error("token {token:?} is out of vocabulary")]
    OutOfVocabulary { token: String },

    #[error("invalid mass vector: {message}")]
    InvalidMass { message: String },

    #[error("invalid cost matrix: {message}")]
    InvalidCost { message: String },

    #[error("transport solver: {message}")]
    Solver { message: String },

    #[error("{context}: need at least {needed}, got {got}")]
    Insufficient {
        context: String,
        needed: usize,
        got: usize,
    },

    #[error("invalid argument: {message}")]
    InvalidArgument { message: String },
}

impl Error {
    /// True for errors that mean "this sentence pair cannot be scored with
    /// this table" rather than a malformed input or an internal failure.
    /// Evaluation harnesses may skip such pairs instead of aborting.
    pub fn is_pair_skippable(&self) -> bool {
        matches!(
            self,
            Error::EmptyBag { .. } | Error::OutOfVocabulary { .. } | Error::ZeroNorm { .. }
        )
    }
}
