use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A weight construction produced invalid breakpoints or pieces.
    #[error("weight construction failed: {0}")]
    Build(String),
    /// A root finder or scan could not bracket a solution.
    #[error("solver failed: {0}")]
    Solver(String),
    /// A sampling lattice is too coarse to resolve the smallest piece.
    #[error("lattice resolution too coarse: {0}")]
    Resolution(String),
    /// Invalid run configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// An invariant that should hold by construction was violated.
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
