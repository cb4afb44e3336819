use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric (max |W - W^T| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not symplectic (max |S Omega S^T - Omega| = {defect:e})")]
    NotSymplectic { defect: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-positive variance {0}")]
    NonPositiveVariance(f64),

    #[error("graph preset `{0}` has no inseparability bounds; supply custom bound pairs")]
    MissingBounds(String),

    #[error("invalid evolution-strategy settings: {0}")]
    InvalidEsConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
