use thiserror::Error;

/// Errors shared by every layer of the crate.
#[derive(Debug, Error)]
pub enum GgsError {
    #[error("invalid defining vector: {0}")]
    InvalidVector(String),

    #[error("malformed vertex: {0}")]
    MalformedVertex(String),

    /// Operands belong to different trees (or different engine sessions).
    #[error("tree shape mismatch between operands")]
    ShapeMismatch,

    #[error("requested depth {requested} exceeds the configured cap {cap}")]
    DepthExceeded { requested: u32, cap: u32 },

    #[error("permutation degree {degree} exceeds the configured cap {cap}")]
    DegreeCapExceeded { degree: u64, cap: u64 },

    /// A hypothesis of the requested operation does not hold for this input.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("containment violation: {0}")]
    ContainmentViolation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, GgsError>;
