use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Bit or sample counts that do not fit the frame layout.
    #[error("framing error: {0}")]
    Framing(String),
    /// An estimator had nothing usable to work with.
    #[error("estimation error: {0}")]
    Estimation(String),
    /// Numerical failure that valid inputs should never trigger.
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
