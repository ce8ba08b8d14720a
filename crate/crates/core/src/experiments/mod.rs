//! Synthetic dynamics, the filtering benchmark and the statistical checks.

pub mod benchmark;
pub mod config;
pub mod oracle;
pub mod toy;

pub use benchmark::{run_benchmark, RunningMseReport};
pub use oracle::{oracle_check, OracleConfig, OracleReport};
pub use config::{Algorithm, BandwidthMode, ExperimentConfig};
pub use toy::{generate_toy, toy_supervision, ToyDynamicsConfig, ToyTrajectory};
