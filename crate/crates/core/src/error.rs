use thiserror::Error;

/// Errors raised across the sampling toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("parameters outside the supported regime: {0}")]
    OutOfRegime(String),

    #[error(
        "inner solver did not converge at step {step}: gradient norm {gradient_norm:e} after {iterations} iterations"
    )]
    SolverNonConvergence {
        step: usize,
        gradient_norm: f64,
        iterations: usize,
    },

    #[error("degenerate bandwidth: {0}")]
    DegenerateBandwidth(String),

    #[error("quadrature accuracy not reached: estimate {estimate}, error {error:e} after {intervals} intervals")]
    AccuracyNotReached {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} contains non-finite entries")))
    }
}

pub(crate) fn ensure_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
