//! Experiment runner for the adrcm simulators, Palm sampler and oracles.

pub mod config;
pub mod experiment;
pub mod heatmap;
pub mod output;

pub use config::{Config, ConfigError, Kind};
pub use experiment::{derive_seed, run, run_to_dir, Outcome, RunError};
