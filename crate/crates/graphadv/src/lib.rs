//! Experiment harness for `graphadv-core`: file formats, checkpoints,
//! configuration, outcome logs, reports and the command pipelines behind
//! the `graphadv` binary.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod formats;
pub mod logs;
pub mod pairing;
pub mod pipeline;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use graphadv_core as core;
