//! Experiment harness: TOML configs, seed sweeps at equal budgets, CSV and
//! JSON outputs, and the theory report over a finished run directory.

pub mod analyze;
pub mod config;
mod error;
pub mod oracle;
pub mod persist;
pub mod runner;

pub use config::{Algorithm, ExperimentConfig, LzSetting, ZoomingSettings};
pub use error::HarnessError;
