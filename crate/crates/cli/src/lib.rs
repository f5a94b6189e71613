//! Command-line front end for `hotspot-pricing`: single pricing queries,
//! Monte Carlo runs, figure sweeps as CSV, and analytic-vs-simulation
//! validation reports.
//!
//! Exit codes: 0 on success, 1 when a validation comparison fails, 2 for
//! configuration or pricing errors.

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod sweep;
pub mod validate;

pub use commands::{run, Cli, Command};
pub use config::{Config, McSettings, ValidationSpec};
pub use error::{CliError, CliResult};
pub use sweep::{run_sweep, Experiment, Model, SweepSpec, SweptParam};
pub use validate::{run_validation, Comparison};
