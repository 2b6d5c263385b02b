use thiserror::Error;

/// Errors surfaced by every layer of the simulator.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PirError {
    #[error("modulus {0} is not a supported prime (need an odd prime below 2^32)")]
    NotPrime(u64),
    #[error("scalars belong to different fields (p={0} vs p={1})")]
    FieldMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("empty coefficient list")]
    EmptyPolynomial,
    #[error("evaluation points must be pairwise distinct: {0}")]
    RepeatedPoints(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("non-integer co-dimension ({numerator}/{denominator})")]
    NonIntegerCodimension { numerator: u64, denominator: u64 },
    #[error("statistical audit under-populated: {0}")]
    UnderPopulated(String),
    #[error("serialization: {0}")]
    Serialization(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, PirError>;

impl From<serde_json::Error> for PirError {
    fn from(e: serde_json::Error) -> Self {
        PirError::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for PirError {
    fn from(e: std::io::Error) -> Self {
        PirError::Io(e.to_string())
    }
}
