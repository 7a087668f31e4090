use thiserror::Error;

/// Errors raised by the numerical core (signals, simulator, estimator).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation accepts.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The input carries no usable information (e.g. an all-zero voltage).
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// The simulator state stopped being finite.
    #[error("simulation diverged at t = {time} s")]
    Divergence { time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
