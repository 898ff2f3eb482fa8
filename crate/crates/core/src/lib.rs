pub mod approximation;
pub mod bounds;
pub mod divergences;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod measure;
pub mod normal;
pub mod partition;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
