use std::io;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller passed arguments that violate an operation's contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A mathematically undefined request (zero inverse, duplicate points, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Decoding produced inconsistent material.
    #[error("integrity failure: {0}")]
    Integrity(String),
    /// An exhaustive enumeration would exceed the configured state cap.
    #[error("state space of {states} exceeds the cap of {cap}")]
    ResourceCap { states: u128, cap: u128 },
    /// A serialized artifact could not be parsed.
    #[error("malformed container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
