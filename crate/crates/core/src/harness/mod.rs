//! Synthetic data and batch experiments.

mod grid;
mod queries;
mod synth;

pub use grid::{design_option_grid, results_to_run, run_grid, ExperimentReport, GridConfig, ReportRow};
pub use queries::{format_queries, parse_queries};
pub use synth::{generate_corpus, SynthCorpus, SynthSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("query {qid} failed: {message}")]
    Query { qid: String, message: String },
}
