//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("fiber dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("form degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("unsupported form degree {0}")]
    UnsupportedDegree(usize),
    #[error("profile not defined at x = {x}: {reason}")]
    ProfileDomain { x: f64, reason: &'static str },
    #[error("quadrature resolution must be positive")]
    InvalidResolution,
    #[error("operation requires n >= {required}, got n = {got}")]
    UnsupportedDimension { required: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
