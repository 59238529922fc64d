use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("faces are not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("block-diagonal matrix carries off-block mass {mass:e}")]
    OffBlockMass { mass: f64 },

    #[error("{0} did not converge")]
    ConvergenceFailure(&'static str),

    #[error("face {face} is not Hermitian (deviation {deviation:e})")]
    NotHermitianFaces { face: usize, deviation: f64 },

    #[error("face {face} is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPD { face: usize, min_eigenvalue: f64 },

    #[error("eta * ||blkdiag(L)|| = {value} exceeds 1")]
    SpectralNormViolation { value: f64 },

    #[error("index ({i}, {j}, {k}) out of range for {m}x{n}x{d}")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        k: usize,
        m: usize,
        n: usize,
        d: usize,
    },

    #[error("invalid budget: {0}")]
    InvalidBudget(String),

    #[error("requested {requested} plays but only {available} indices exist")]
    BudgetExceeded { requested: usize, available: usize },

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("node {0} has no neighbours")]
    IsolatedNode(usize),

    #[error("graph still disconnected after {0} attempts")]
    DisconnectedAfterRetries(usize),

    #[error("ratings tensor is on the wrong scale: {0}")]
    ScaleMismatch(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
