use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input range: all {count} samples equal {value}")]
    DegenerateRange { count: usize, value: f64 },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("unsupported primitive: {0}")]
    Unsupported(String),

    #[error("non-finite gradient in {block}")]
    NonFiniteGradient { block: String },

    #[error("grid shrink from G={from} to G={to} is not a valid extension")]
    GridShrink { from: usize, to: usize },

    #[error("reference norm is zero")]
    ZeroReference,

    #[error("numeric abort at epoch {epoch}: {reason}")]
    NumericAbort { epoch: usize, reason: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
