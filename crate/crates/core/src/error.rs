use thiserror::Error;

/// Errors produced by the spectral toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A dense construction would exceed the configured node cap.
    #[error("resource cap exceeded: {nodes} nodes requested, cap is {cap}")]
    ResourceCap { nodes: usize, cap: usize },

    /// The fixed-point iteration did not reach the requested residual.
    #[error(
        "solver did not converge after {iterations} iterations (residual {residual:e}) at z = {z}"
    )]
    Convergence {
        iterations: usize,
        residual: f64,
        z: num_complex::Complex64,
    },

    /// A converged point violates Im(z)·Im(S) > 0.
    #[error("converged point is outside the admissible solution class at z = {z} (S = {s})")]
    SolutionClass {
        z: num_complex::Complex64,
        s: num_complex::Complex64,
    },

    /// A denominator of the right-hand side map vanished.
    #[error("singular right-hand side at z = {0}")]
    Singular(num_complex::Complex64),

    /// A grid point of a density sweep failed; wraps the underlying error.
    #[error("at x = {x}: {source}")]
    AtGridPoint {
        x: f64,
        #[source]
        source: Box<Error>,
    },

    /// Two curves were compared on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Strips grid-point annotations and returns the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtGridPoint { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Domain(_) | Error::Parse(_) | Error::Io(_) => 2,
            Error::Convergence { .. } | Error::SolutionClass { .. } | Error::Singular(_) => 3,
            Error::ResourceCap { .. } => 4,
            Error::GridMismatch(_) => 5,
            Error::AtGridPoint { .. } => unreachable!("root never returns a wrapper"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
