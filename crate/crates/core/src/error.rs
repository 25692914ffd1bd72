use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("z = {re} + {im}i is an eigenvalue of the state matrix")]
    EigenvalueOnCircle { re: f64, im: f64 },

    #[error("step size {alpha} is outside the admissible range: {reason}")]
    StepSizeOutOfRange { alpha: f64, reason: String },

    #[error("no certificate exists: {0}")]
    Infeasible(String),

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
