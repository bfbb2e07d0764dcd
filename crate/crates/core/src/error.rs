use thiserror::Error;

/// Errors produced by curve construction and scoring.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid size {height}x{width}: {reason}")]
    InvalidSize {
        height: usize,
        width: usize,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("spanning tree violates its contract: {0}")]
    InvalidTree(&'static str),

    #[error("objective undefined: {0}")]
    UndefinedObjective(&'static str),

    #[error("unsupported size for {kind}: {height}x{width}")]
    UnsupportedSize {
        kind: &'static str,
        height: usize,
        width: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("training diverged at iteration {iteration}: {what} is not finite")]
    Diverged { iteration: usize, what: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
