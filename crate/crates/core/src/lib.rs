//! Numerical laboratory for synthetic upper Ricci bounds on model metric
//! measure spaces: exact heat kernels, discrete optimal transport, entropy
//! along Wasserstein geodesics, and the expansion-rate estimators built on
//! top of them.

pub mod error;
pub mod special;
pub mod spaces;
pub mod transport;
pub mod heat;
pub mod entropy;
pub mod estimators;

pub use error::{Error, Result};
