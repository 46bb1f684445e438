use thiserror::Error;

/// Errors produced by tensor operations, optimizers, and bound evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("invalid index subset: {0}")]
    InvalidSubset(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("partition enumeration for r = {r} exceeds the cap of {cap}")]
    PartitionCap { r: usize, cap: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid norm order {0}: must be >= 2 or infinity")]
    NormOrder(f64),

    #[error("no ascent direction: gradient is zero")]
    NoAscentDirection,

    #[error("non-finite objective value {value} (restart {restart}, iteration {iteration}, block {block})")]
    NonFinite {
        value: f64,
        restart: usize,
        iteration: usize,
        block: usize,
    },

    #[error("search space of about {estimate:.3e} points exceeds the cap of {cap:.3e}")]
    SearchSpace { estimate: f64, cap: f64 },

    #[error("invalid probability vector: {0}")]
    Probability(String),

    #[error("model is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("unknown {what}: {value:?}")]
    Unknown { what: &'static str, value: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
