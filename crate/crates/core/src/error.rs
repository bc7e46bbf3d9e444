use thiserror::Error;

use crate::uzawa::DiscreteSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("vector length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("friction modulus must be positive at interior trace nodes; got {value} at node {node}")]
    InvalidModulus { node: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("saddle-point matrix is numerically singular (offending index {index})")]
    Singular { index: usize },

    #[error("linear solve residual {achieved:.3e} exceeds tolerance {tolerance:.1e}")]
    ResidualFailure { achieved: f64, tolerance: f64 },

    #[error(
        "Uzawa iteration did not converge in {max_iter} iterations (last H1 increment {last_increment:.6e})"
    )]
    NonConvergence {
        max_iter: usize,
        last_increment: f64,
        last_iterate: Box<DiscreteSolution>,
    },

    #[error("boundary condition {bc} requires {expected} pressure gauge, got {actual}")]
    InvalidPairing {
        bc: &'static str,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("levels are not nested: {coarse} does not divide {fine}")]
    NonNested { coarse: usize, fine: usize },

    #[error("convergence study failed at level N={level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("factorization backend error: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
