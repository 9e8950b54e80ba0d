//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {dev:.3e} > {tol:.1e})")]
    NotHermitian { dev: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("Kraus set is not trace-preserving (deviation {dev:.3e})")]
    NotTracePreserving { dev: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("insufficient subsystems: need {needed}, have {available}")]
    InsufficientSubsystems { needed: usize, available: usize },

    #[error("no eligible region of the requested size")]
    NoEligibleRegion,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
