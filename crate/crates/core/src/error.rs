use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid jump distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {left} != {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("closed form requires a symmetric increment distribution")]
    NotSymmetric,

    #[error("{states} clockwork states exceed the dense limit of {limit}")]
    DimensionTooLarge { states: usize, limit: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
}
