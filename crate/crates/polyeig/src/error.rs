use thiserror::Error;

/// Failures reported by the solver and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation was called outside its documented domain.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Malformed user input.
    #[error("invalid input: {0}")]
    Input(String),
    /// A file that does not follow the expected syntax.
    #[error("parse error: {0}")]
    Parse(String),
    /// Dimensions that do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// The rank-one part of a spike factor cannot be recovered.
    #[error("singular representation: {0}")]
    SingularRepresentation(String),
    /// The triangularizing equivalence could not be computed.
    #[error("preprocessing failed: {0}")]
    Preprocessing(String),
    /// No usable eigenvector could be read off the accumulated transformation.
    #[error("eigenvector extraction failed: {0}")]
    Extraction(String),
    /// An iteration ran out of budget.
    #[error("no convergence: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
