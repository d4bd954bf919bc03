//! Perturbation-rectified OOD detection for small dense classifiers.

pub mod analysis;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod model;
pub mod parallel;
pub mod pro;
pub mod scores;
pub mod tensor;

pub use error::{Error, Result};
