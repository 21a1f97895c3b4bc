//! Config-driven front end for the matrix-valued Allen-Cahn laboratory:
//! initial-condition generators, the run driver, and the snapshot analyzer.

pub mod analyze;
pub mod config;
pub mod initial;
pub mod runner;

pub use config::{ConfigError, RunConfig, Scheme};
pub use initial::{generate_initial, EtaSpec, InitialSpec};
pub use runner::{init_from_config, run_from_config, RunError, RunOutputs};
