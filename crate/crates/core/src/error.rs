use thiserror::Error;

use crate::catalytic::RestoreReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid prime basis: {0}")]
    InvalidBasis(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("residue {value} at position {index} is not reduced modulo {modulus}")]
    ResidueOutOfRange { index: usize, value: u64, modulus: u64 },

    #[error("{value} is not invertible modulo {modulus}")]
    NotInvertible { value: u64, modulus: u64 },

    #[error("no prime q <= {bound} with {modulus} | q - 1")]
    PrimeNotFound { modulus: u64, bound: u64 },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: u64, size: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no tape offset makes every slot a valid ring element")]
    NoOffset,

    #[error("space ledger scope error: {0}")]
    Ledger(String),

    #[error("catalytic tape not restored: {0}")]
    RestorationFailed(RestoreReport),

    #[error("node path overflow: depth {depth} exceeds height {height}")]
    PathOverflow { depth: usize, height: usize },

    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("parse error at line {line}, field {field}: {message}")]
    Parse { line: usize, field: usize, message: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, field: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, field, message: message.into() }
    }
}
