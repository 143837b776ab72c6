//! Config ingestion and parameter sweeps behind the `groundstate` binary.

pub mod config;
pub mod sweep;

pub use config::{Axis, Config, ConfigError, Param};
pub use sweep::{evaluate_point, run_sweep, SweepRow};
