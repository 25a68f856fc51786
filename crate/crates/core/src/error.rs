use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular or not positive definite")]
    Singular,
    #[error("Nahm flow blew up at s = {s:.4} (norm {norm:.3e})")]
    Blowup { s: f64, norm: f64 },
    #[error("grid size {0} is too small or has the wrong parity")]
    BadGrid(usize),
    #[error("path is not a Nahm solution (residual {0:.3e})")]
    NotASolution(f64),
    #[error("transport identity violated (defect {0:.3e})")]
    TransportDefect(f64),
    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("point is off the complex level set (residual {0:.3e})")]
    OffLevelSet(f64),
    #[error("rank deficiency: expected rank {expected}, found {found}")]
    RankDeficient { expected: usize, found: usize },
    #[error("parameter is not central (projection residual {0:.3e})")]
    NotCentral(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
