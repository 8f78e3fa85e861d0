use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function (e.g. a negative residual norm).
    #[error("domain error: {0}")]
    Domain(String),
    /// Input data is malformed (non-finite entries, wrong shape, bad parameters).
    #[error("invalid input: {0}")]
    Input(String),
    /// A caller broke a documented precondition (shape mismatch, off-simplex weights).
    #[error("contract violation: {0}")]
    Contract(String),
    /// The data carries no usable information (all points identical, zero denominators).
    #[error("degenerate data: {0}")]
    Degenerate(String),
    /// A numerical procedure failed (non-PSD Gram, singular system, repeated eigenvalue).
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> Error {
    Error::Numeric(msg.into())
}
