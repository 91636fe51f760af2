//! Error taxonomy shared by the whole library.

use thiserror::Error;

/// Errors produced by problem oracles, operators, drivers and schedules.
#[derive(Debug, Error)]
pub enum VrError {
    /// A vector and a problem (or two vectors) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A computed quantity left the representable range (NaN or infinity
    /// where a finite value is required).
    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    /// The operation is not defined for this problem mode or kind.
    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),

    /// A schedule or recipe is missing a required constant, or a
    /// configuration value is out of range. `name` identifies the field.
    #[error("configuration error: {name}: {message}")]
    Configuration { name: String, message: String },

    /// An iterative reference computation did not reach its tolerance
    /// within its iteration cap.
    #[error("did not converge: reached {achieved:e}, target {target:e}")]
    NotConverged { achieved: f64, target: f64 },
}

impl VrError {
    pub fn contract(msg: impl Into<String>) -> Self {
        VrError::ContractViolation(msg.into())
    }

    pub fn config(name: impl Into<String>, message: impl Into<String>) -> Self {
        VrError::Configuration {
            name: name.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, VrError>;
