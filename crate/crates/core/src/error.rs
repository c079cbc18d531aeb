use thiserror::Error;

/// Errors raised by the estimation, testing and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input data violates a structural requirement (lengths, signs, finiteness).
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// Data is well formed but numerically degenerate for the requested computation.
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// The sample contains no censored observations, so the censoring
    /// distribution cannot be estimated.
    #[error("no censoring: every observation is an event")]
    NoCensoring,

    /// A configuration or distribution parameter is out of range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Numerical integration did not reach the requested tolerance.
    #[error("quadrature did not converge (achieved error estimate {estimate:e})")]
    Quadrature { estimate: f64 },

    /// Calibration could not bracket the requested censoring fraction.
    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
