use thiserror::Error;

use crate::classical::ClassicalState;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("product dimension {0} exceeds the supported maximum of {max}", max = crate::spin::MAX_DIM)]
    DimensionOverflow(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("value {value:.3e} outside [0, 1] beyond tolerance in {what}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("trajectory reached the sphere boundary at t = {time}")]
    SphereBoundary { time: f64, last: ClassicalState },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::DimensionOverflow(_)
                | Error::InvalidParameter { .. }
                | Error::NotHermitian(_)
                | Error::InvalidState(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
