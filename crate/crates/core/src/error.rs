use thiserror::Error;

use crate::eigen::EigenPair;
use crate::krylov::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("zero diagonal entry in row {row}")]
    SingularDiagonal { row: usize },

    #[error("dense factorization is singular at pivot {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("fission source vanished (|B phi| = 0)")]
    DegenerateFission,

    #[error("flux sum vanished at face {face}, group {group}")]
    DegenerateFlux { face: usize, group: usize },

    #[error("cannot split {rows} rows into {parts} nonempty parts")]
    InfeasiblePartition { parts: usize, rows: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{context}: linear solver did not converge after {} iterations", .report.iterations)]
    SolverFailure {
        context: String,
        report: Box<SolveReport>,
    },

    #[error("line search exhausted after {newton_iterations} Newton steps (|F| = {residual:e})")]
    Stagnation {
        best: Box<EigenPair>,
        residual: f64,
        newton_iterations: usize,
    },

    #[error("line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(op: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            op,
            expected,
            found,
        }
    }

    pub(crate) fn config(line: usize, key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            key: key.into(),
            message: message.into(),
        }
    }
}
