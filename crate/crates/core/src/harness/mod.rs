//! Experiment harness: configuration ingestion, run orchestration, and
//! artifact persistence for the CLI verbs.

pub mod artifacts;
pub mod config;
pub mod run;

pub use artifacts::RunArtifacts;
pub use config::{parse_config, CliOverrides, ExperimentConfig};
pub use run::{list_operators_text, peano_compare, probe_operator, run, sweep_eps, RunOutcome};
