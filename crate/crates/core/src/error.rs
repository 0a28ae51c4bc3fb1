use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid block spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("block {block} has zero average sparsity; merge it with a neighbour or drop it before weighting")]
    EmptyBlock { block: usize },

    #[error("selected columns are rank deficient (support size {support})")]
    RankDeficient { support: usize },

    #[error("sensing matrix lost full row rank (smallest singular value {sigma_min:e})")]
    SingularSensing { sigma_min: f64 },

    #[error("sensing SNR is undefined for a zero signal")]
    ZeroSignal,

    #[error("received SNR is undefined for zero noise")]
    ZeroNoise,

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
