pub mod bench;
pub mod citest;
pub mod data;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod pc;
pub mod residuals;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
