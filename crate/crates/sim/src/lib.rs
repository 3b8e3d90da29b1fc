//! Monte Carlo harness for wideband hybrid beamforming experiments: config
//! handling, seeded sweeps, gain maps and CSV output.

pub mod config;
pub mod error;
pub mod gain_map;
pub mod output;
pub mod seed;
pub mod sweep;

pub use config::{Algorithm, Experiment, ExperimentConfig, ShapePolicy};
pub use error::{Result, SimError};
pub use sweep::{SweepPoint, SweepResult};
