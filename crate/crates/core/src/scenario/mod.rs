//! Configuration ingestion, scenario orchestration and result serialization.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, Provenance, Scenario, ScenarioConfig};
pub use output::{emit_summary, parse_trajectory_csv, write_trajectory, OutputError};
pub use run::{compute_scenario, run_scenario, Artifacts, RunError, RunOptions, ScenarioResults};
