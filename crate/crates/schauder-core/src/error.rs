use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid basis index (m = {m}, k = {k})")]
    InvalidBasisIndex { m: i64, k: u64 },

    #[error("invalid dyadic index {numerator}/2^{level}")]
    InvalidDyadic { numerator: u64, level: u32 },

    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("result is already truncated")]
    AlreadyTruncated,

    #[error("undefined estimate: generation {generation} is identically zero")]
    UndefinedEstimate { generation: i32 },

    #[error("matrix is singular to working precision (pivot {pivot} of size {magnitude:e})")]
    Conditioning { pivot: usize, magnitude: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("operation not supported for this function kind: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
