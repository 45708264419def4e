use alloc::string::String;

/// Errors raised by the numerical layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical blow-up at t = {t}: {what}")]
    NumericalBlowup { t: f64, what: String },
    #[error("imaginary-time relaxation did not converge after {steps} steps (last energy {energy})")]
    ConvergenceFailure { steps: usize, energy: f64 },
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
