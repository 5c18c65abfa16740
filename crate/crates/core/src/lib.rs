pub mod cli;
pub mod coords;
pub mod elements;
pub mod error;
pub mod filters;
pub mod harness;
pub mod kepler;
pub mod measurement;
pub mod stats;

pub use error::{Error, Result};
