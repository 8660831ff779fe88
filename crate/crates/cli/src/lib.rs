//! Experiment runner for the position-building trading game: configuration,
//! κ-sweep orchestration and the CSV/JSON artifacts consumed by plotting.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod experiment;

pub use config::{Algorithm, EtaSetting, ExperimentConfig};
pub use error::ExperimentError;
pub use experiment::{run_experiment, simulate, simulate_grid, RunOutput};
