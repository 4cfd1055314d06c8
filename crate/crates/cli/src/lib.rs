//! Scenario runner behind the `pmfront` command: JSON configs, one pipeline
//! per scenario, parameter sweeps and SVG plots.

pub mod config;
pub mod error;
pub mod plot;
pub mod scenarios;
pub mod sweep;

pub use config::{ExperimentConfig, Scenario};
pub use error::{CliError, CliResult};
pub use scenarios::{criteria_for, run_scenario, ScenarioReport};
