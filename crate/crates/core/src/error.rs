use thiserror::Error;

use crate::matkernel::Ket;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error(
        "image of the identity is singular (min eigenvalue {min_eigenvalue:e}); retry with epsilon > 0"
    )]
    SingularM { min_eigenvalue: f64 },

    #[error("trace must be 1 (got {trace})")]
    BadTrace { trace: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("frame is not informationally complete (rank {rank}, need {required})")]
    FrameSingular { rank: usize, required: usize },

    #[error("least-squares residual {residual:e} exceeds {threshold:e}; data is not a linear preparation")]
    ResidualTooLarge { residual: f64, threshold: f64 },

    #[error("witnessed negative product expectation {value:e}")]
    NotPoptWitnessed { value: f64, alpha: Ket, beta: Ket },

    #[error("POVM invalid: completeness residual {completeness:e}, min eigenvalue {min_eigenvalue:e}")]
    InvalidPovm { completeness: f64, min_eigenvalue: f64 },

    #[error("linear program is unbounded with {constraints} constraints; sample more")]
    Unbounded { constraints: usize },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
