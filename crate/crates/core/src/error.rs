use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QjlError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("block index {index} out of range 1..={num_blocks}")]
    BlockIndexOutOfRange { index: usize, num_blocks: usize },

    #[error("invalid block structure: d1={d1}, d2={d2}")]
    InvalidBlockStructure { d1: usize, d2: usize },

    #[error("not a probability distribution: {0}")]
    NotADistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("vector lies outside the sampled subspace (residual {residual:.3e})")]
    OutsideSpan { residual: f64 },

    #[error("malformed monomial: {0}")]
    MalformedMonomial(String),
}

pub type Result<T> = std::result::Result<T, QjlError>;
