//! Command-line harness for twin experiments with the two-stage filter:
//! configuration, the simulate/assimilate pipeline, metrics, CSV output and
//! a transport self-check.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod ot_check;

pub use config::ExperimentConfig;
pub use error::CliError;
