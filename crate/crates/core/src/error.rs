use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at tape node {node}")]
    NonFiniteNode { node: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("non-finite gradient for parameter `{name}`")]
    NonFiniteGradient { name: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("missing target in row {row}")]
    MissingTarget { row: usize },

    #[error("reference norm is zero")]
    ZeroNorm,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("Cholesky factorization failed (last jitter {jitter:e})")]
    Cholesky { jitter: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
