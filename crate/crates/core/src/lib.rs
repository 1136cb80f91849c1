pub mod activations;
pub mod error;
pub mod norm;

pub use error::{Error, Result};
pub mod cli;
pub mod fitting;
pub mod rng;
pub mod simulation;
pub mod verification;
