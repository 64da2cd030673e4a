//! Experiment harness for `polyrl-core`: configuration, seeded runs,
//! sweeps, chain statistics, CSV files and SVG rendering.

pub mod chain_stats;
pub mod config;
pub mod csvio;
pub mod error;
pub mod experiment;
pub mod render;
pub mod sweep;

pub use config::{ExperimentConfig, Method};
pub use error::{LabError, Result};
