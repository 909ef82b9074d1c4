use thiserror::Error;

/// Errors raised by the model and the Monte Carlo oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside its physical domain.
    #[error("{name} = {value} is out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// An operation was called with a setup it does not apply to.
    #[error("misuse: {0}")]
    Misuse(String),
    /// A linear solve was too ill-conditioned to trust.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Invalid Monte Carlo configuration.
    #[error("oracle config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        reason,
    }
}
