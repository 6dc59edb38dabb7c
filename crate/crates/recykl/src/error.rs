use std::path::PathBuf;

use crate::krylov::AugmentedPcgResult;
use crate::threestage::{SolveReport, SystemOutcome};

pub type Result<T> = std::result::Result<T, Error>;

/// Partial state attached to a non-converged solve.
#[derive(Debug, Clone)]
pub enum Partial {
    Krylov(Box<AugmentedPcgResult>),
    System(Box<SystemOutcome>),
    /// Reports of the systems solved before the failure.
    Sequence(Vec<SolveReport>),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },
    #[error("iteration limit reached in {0}")]
    IterationLimit(&'static str),
    #[error("basis is rank deficient")]
    RankDeficient,
    #[error("no snapshot energy: all weights or snapshots vanish")]
    EmptyBasis,
    #[error("weight history is empty")]
    NoHistory,
    #[error("Krylov breakdown at iteration {iteration}: p'Ap = {gamma:e}")]
    Breakdown { iteration: usize, gamma: f64 },
    #[error("not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        partial: Partial,
    },
    #[error("regime not applicable: {0}")]
    RegimeInapplicable(String),
    #[error("invalid grid {nx}x{ny}")]
    InvalidGrid { nx: usize, ny: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", file.display())]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
