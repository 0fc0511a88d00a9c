use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("embedding dimension mismatch at line {line}: expected {expected}, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate embedding key (frame {frame}, index {index})")]
    DuplicateKey { frame: u32, index: u32 },

    #[error("no embedding for detection (frame {frame}, index {index})")]
    MissingEmbedding { frame: u32, index: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("metrics undefined: {0}")]
    Metrics(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("{0}")]
    Input(String),
}
