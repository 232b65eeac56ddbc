use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("elements belong to different groups: {left} vs {right}")]
    MismatchedGroup { left: String, right: String },

    #[error("coordinate vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("direction must be unit length, got norm {norm}")]
    NonUnit { norm: f64 },

    #[error("vectors are linearly dependent (Gram determinant {gram})")]
    Dependent { gram: f64 },

    #[error("matrix is not in the Lie algebra (residual {residual:e})")]
    NotInAlgebra { residual: f64 },

    #[error("invalid group family: {0}")]
    InvalidFamily(String),

    #[error("action not free at g: action fields have rank {rank} < {expected}")]
    NotFree { rank: usize, expected: usize },

    #[error("generator index {index} out of range ({count} generators)")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid generators: {0}")]
    InvalidGenerators(String),

    #[error("vector is not vertical (horizontal residual {residual:e})")]
    NotVertical { residual: f64 },

    #[error("vector is not horizontal (vertical residual {residual:e})")]
    NotHorizontal { residual: f64 },

    #[error("tangent vector is based at a different point")]
    BaseMismatch,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("horizontal space has dimension {0}; a plane needs at least 2")]
    HorizontalTooSmall(usize),

    #[error("candidate pair does not commute (commutator norm {0:e})")]
    NonCommuting(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
