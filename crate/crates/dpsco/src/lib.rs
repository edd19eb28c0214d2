//! Experiment harness, file formats and command-line plumbing around
//! [`dpsco_core`].

pub use dpsco_core as core;

pub mod build;
pub mod config;
pub mod data_io;
pub mod error;
pub mod harness;
pub mod mechcheck;
pub mod records;
pub mod slope;
pub mod stats;

pub use config::ExperimentConfig;
pub use error::{HarnessError, HarnessResult};
pub use harness::run_experiment;
pub use records::{read_records, write_records, RunRecord};
