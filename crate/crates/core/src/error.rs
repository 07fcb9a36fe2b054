use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid damping at ({x}, {y}): {message}")]
    InvalidDamping { x: f64, y: f64, message: String },

    #[error("dense eigensolve of dimension {dim} exceeds the cap of {cap}; use the shift-invert solver")]
    TooLarge { dim: usize, cap: usize },

    #[error("shifted matrix is singular at shift {shift}")]
    ShiftFailure { shift: Complex64 },

    #[error("Crank-Nicolson system is singular (dt = {dt})")]
    SingularStep { dt: f64 },

    #[error("insufficient data: need {needed} usable samples, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
