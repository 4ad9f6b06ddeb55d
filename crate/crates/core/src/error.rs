use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("partition has {blocks} blocks but only {labels} labels are available")]
    TooManyBlocks { blocks: usize, labels: usize },

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("probabilities sum to {0}, expected 1")]
    Unnormalized(f64),

    #[error("label prior has empty support")]
    EmptySupport,

    #[error("could not place grain {grain} after {attempts} attempts; use a larger image")]
    Packing { grain: usize, attempts: usize },

    #[error("grains overlap at pixel ({x}, {y})")]
    Overlap { x: usize, y: usize },

    #[error("corrupt size distribution: omega increases at t={0}")]
    CorruptSweep(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
