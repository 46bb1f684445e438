//! Injective-norm bounds for random tensors `T = Σ_k ξ_k T_k` with
//! subgaussian coefficients, and the machinery to check them numerically.

pub mod ball;
pub mod checks;
pub mod bounds;
pub mod error;
pub mod estimate;
pub mod injective;
pub mod linalg;
pub mod mc;
pub mod tensor;
pub mod variance;

pub use error::{Error, Result};
