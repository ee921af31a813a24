//! Experiment harness: configuration, output bookkeeping and the
//! subcommands behind the `gnlab` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod plot;

pub use config::ExperimentConfig;
pub use error::{HarnessError, HarnessResult};
