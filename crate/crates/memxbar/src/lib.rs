//! Experiment harness for memristive crossbar inference: datasets, metrics,
//! configuration, seeded sweeps, file formats and plotting.

pub mod bench;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod kfold;
pub mod metrics;
pub mod plot;
pub mod sweep;

pub use config::ExperimentConfig;
pub use dataset::Dataset;
pub use error::{HarnessError, Result};
pub use sweep::{run_sweep, SweepRecord, SweepResult};
