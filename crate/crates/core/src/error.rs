use std::io;

use thiserror::Error;

/// Errors produced by the placement library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of range or inconsistent.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The requested allocation cannot be satisfied.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An iterative routine ran out of iterations.
    #[error("did not converge after {iterations} iterations: {what}")]
    Convergence { what: String, iterations: usize },

    /// An input violated a documented contract (e.g. a non-concave curve fed to the greedy).
    #[error("contract violation for video {video}: {reason}")]
    Contract { video: usize, reason: String },

    /// Shapes of topology, demand and placement do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The exhaustive oracle refuses instances above its size guard.
    #[error("instance too large for exhaustive search: {0} subsets")]
    TooLarge(u128),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
