//! Experiment configuration, seeded parallel trials, CSV/JSON output and
//! the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod run;
pub mod stats;

pub use acceptance::{verify_acceptance, AcceptanceReport, CriterionResult, CRITERIA};
pub use config::{
    AgentConfig, ConfiguredAgent, EnvConfig, ExperimentConfig, ExperimentKind, ScenarioFile,
};
pub use run::{
    read_results, run_experiment, summarize_rows, write_outputs, ExperimentResult, ResultsRow,
    Summary,
};
pub use stats::{Check, MetricSummary};
