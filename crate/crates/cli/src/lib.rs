//! Configuration-driven experiment runner behind the `calderon` binary.

pub mod config;
pub mod run;

pub use config::{Command, ExperimentConfig};
pub use run::{run, RunError};
