use thiserror::Error;

/// Errors surfaced by the arithmetic layers.
///
/// `Precision` is an honest "cannot decide at the tracked precision" outcome,
/// distinct from `Invalid` (caller broke a precondition) and `Internal`
/// (a consistency assertion failed, indicating a bug or a broken invariant).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("valuation below precision floor pi^{floor}: value is zero within precision but not exactly zero")]
    AmbiguousValuation { floor: i64 },
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

pub(crate) fn internal<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Internal(msg.into()))
}
