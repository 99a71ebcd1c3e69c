use thiserror::Error;

/// Errors produced by the planning toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} joints, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("circle center coincides with the chain base; polar angle undefined")]
    CoincidentWithBase,

    #[error("cannot synthesize a sampler from an empty list of local samplers")]
    EmptySamplerSet,

    #[error("invalid {which} configuration: {reason}")]
    InvalidQuery { which: &'static str, reason: String },

    #[error("start and goal are not connected")]
    NotConnected,

    #[error("local experience generation skipped: {0}")]
    GenerationSkipped(String),

    #[error("malformed database entry {index}: {message}")]
    MalformedEntry { index: usize, message: String },

    #[error("malformed file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
