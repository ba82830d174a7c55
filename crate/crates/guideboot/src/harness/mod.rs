//! Experiment driver: config parsing, seeded episode execution, regret
//! accounting, aggregation, and result files.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse_config, parse_config_str, parse_seeds, AgentHyper, EnvConfig, EnvKind, OutputConfig, RunConfig, AGENT_REGISTRY};
pub use output::{parse_records, write_outputs, RECORDS_HEADER, SUMMARY_HEADER};
pub use runner::{aggregate, build_agent, build_environment, run_episode, run_experiment, RegretRecord, SummaryRow};
