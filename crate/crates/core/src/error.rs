use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("variable index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sharp kernel is not differentiable; use the tube pairing")]
    NotDifferentiable,

    #[error("kernel vanishes to order {order} at 0, but order {requested} was requested")]
    VanishingOrder { order: String, requested: u32 },

    #[error("test form has {got} anti-holomorphic differentials, pairing needs {expected}")]
    FormDegree { expected: usize, got: usize },

    #[error("unsupported map: {0}")]
    UnsupportedMap(String),

    #[error("branch collision on the tube: |w| = {0:e}")]
    BranchCollision(f64),

    #[error("degenerate restriction: {0}")]
    DegenerateRestriction(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
}

pub type Result<T> = std::result::Result<T, Error>;
