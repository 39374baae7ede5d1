// SPDX-License-Identifier: Apache-2.0

//! Configuration-driven experiment runner for the benchmark problems.

pub mod checks;
pub mod config;
pub mod report;
pub mod suite;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Overrides, ProblemSpec, SolverKind};
pub use report::{emit_report, to_csv, to_pretty, ReportFormat};
pub use suite::{generate_instances, run_suite, ResultRow};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Solver(#[from] ppg::Error),
}
