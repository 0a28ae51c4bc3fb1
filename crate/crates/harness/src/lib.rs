//! Experiment runner for weighted ℓ1 spectrum sensing: declarative configs,
//! seeded Monte-Carlo sweeps and plot-ready output.

pub mod config;
pub mod experiment;
pub mod output;
pub mod stats;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig};
pub use experiment::{Figure, Harness, HarnessError, SweepPoint, SweepRecord};
