use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A state or parameter lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// An argument violates a precondition (caps, sign, size).
    #[error("argument error: {0}")]
    Argument(String),
    /// The requested combination is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A series or integral was detected to diverge.
    #[error("divergence detected: {0}")]
    Divergent(String),
    /// Configuration file problems, with line diagnostics where available.
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
