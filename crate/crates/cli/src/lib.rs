//! Library side of the `qcorr` command-line tool: config parsing, scenario
//! orchestration, and CSV output. The binary in `main.rs` is a thin wrapper
//! so integration tests can drive everything in-process.

pub mod config;
pub mod csvout;
pub mod run;

pub use config::{load_scenario, parse_scenario, Scenario, Solver, Truncation};
pub use run::{run_converge, run_scenario, run_sweep, SweepOutput, TimeSeries, TimeSeriesRow};
