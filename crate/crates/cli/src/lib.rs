//! Configuration loading, experiment dispatch and CSV serialization for the
//! `mqcavity` command-line tool.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{load_config, resolve, Experiment, Overrides, Plan, Resolved, RunConfig};
pub use error::CliError;
pub use output::{format_sig, write_result, CSV_DIGITS};
pub use run::{execute, run, summary_line};
