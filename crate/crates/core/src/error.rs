//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor/layer shape disagreement.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// NaN/Inf encountered where finite values are required.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Invalid argument or malformed input data.
    #[error("input error: {0}")]
    InvalidInput(String),
    /// Inconsistent model or run configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Degenerate microphone/source placement.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Malformed file contents.
    #[error("parse error: {0}")]
    Parse(String),
    /// Recognized container, unsupported encoding.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
