//! Experiment harness for the `cesfp` learning engines: configuration
//! files, multi-seed runs with CSV and JSON output, cross-arm comparison and
//! schedule diagnostics. The `cesfp` binary is a thin front end over this.

pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod validate;

pub use compare::{compare, Comparison};
pub use config::{ExperimentConfig, Overrides};
pub use error::{HarnessError, Result};
pub use experiment::{load_summary, run_experiment, Summary};
pub use validate::{validate_schedules, ScheduleQuery};
