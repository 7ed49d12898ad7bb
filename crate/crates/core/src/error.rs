use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Vectors or operators over different measure spaces were combined.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A scalar argument left its admissible range (e.g. t <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// A norm or operator description is internally inconsistent.
    #[error("invalid specification: {0}")]
    Spec(String),

    /// The requested computation needs a polyhedral description that the
    /// given norm does not have.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative procedure ran out of its precision or depth budget.
    #[error("precision budget exhausted: {0}")]
    Precision(String),

    /// Caller-supplied data violates a documented precondition.
    #[error("input error: {0}")]
    Input(String),

    /// An assembled operator failed its own verification.
    #[error("assembly error: {0}")]
    Assembly(String),

    /// Malformed serialized data.
    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
