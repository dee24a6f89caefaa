//! Config-driven runner for LIME uncertainty audits.
//!
//! Three commands back the `limeaudit` binary: [`cmd_run`] executes an
//! experiment config, [`cmd_report`] renders report files as CSV or SVG, and
//! [`cmd_verify`] resolves a config into a plan without running it.

pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use report::{cmd_report, ReportFormat};
pub use run::{cmd_run, cmd_verify, plan, run_config, Plan, RunManifest, RunSummary};
