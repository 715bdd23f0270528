//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("quadrature did not converge: estimated error {estimate:.3e} above tolerance {tolerance:.3e} ({context})")]
    QuadratureNonConvergent {
        estimate: f64,
        tolerance: f64,
        context: String,
    },

    #[error("quadrature grid too coarse: {0}")]
    GridResolution(String),

    #[error("matrix is not positive definite after quadrature (smallest eigenvalue {0:.3e}); grid too coarse")]
    NotPositiveDefinite(f64),

    #[error("ODE solver failed: {0}")]
    Solver(String),

    #[error("unsupported expansion order {0}; orders 0..=2 are implemented")]
    UnsupportedOrder(usize),

    #[error("jet does not carry the derivatives required here: {0}")]
    JetOrder(String),

    #[error("coherent-state truncation tail {tail:.3e} above threshold {threshold:.3e}")]
    TruncationTail { tail: f64, threshold: f64 },

    #[error("coherent overlap underflow: |X-Y|^2/(4h) = {exponent:.3e} exceeds log-threshold {threshold:.3e}")]
    OverlapUnderflow { exponent: f64, threshold: f64 },

    #[error("tensor quadrature dimension 2J = {0} exceeds 8; use the Taylor (jet) method instead")]
    QuadratureDimension(usize),

    #[error("model lacks a rotation representation: {0}")]
    NoRotation(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
