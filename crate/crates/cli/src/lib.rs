//! Experiment harness around the `cbggp` solver: configuration files, CSV traces and the
//! `cbggp run` command.

pub mod config;
mod run;
pub mod trace;

pub use config::{solver_config, ConfigError, ExperimentConfig, MetricChoice, RuleChoice};
pub use run::{
    execute, exit_code, main_with_args, repeat_path, Cli, Command, Outcome, RunArgs, EXIT_CONVERGED,
    EXIT_MAX_ITERATIONS, EXIT_NUMERICAL, EXIT_USAGE,
};
pub use trace::{emit_trace, write_records, HEADER};
