//! Experiment harness for the persistent-monitoring grid world: config
//! files, checkpoints, trajectory logs and images, the parallel comparison
//! grid, and training with logging. The `vpm` binary wraps all of it.

pub mod checkpoint;
pub mod compare;
pub mod config;
mod error;
pub mod formats;
pub mod trail;
pub mod training;

pub use error::{Error, Result};
