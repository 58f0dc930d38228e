//! Experiment harness for the `rsblr` toolkit: sparsity reports,
//! reconstruction runs, bound curves and reproducible corpus benchmarks.
//!
//! Every command is a plain function here; the `rsblr` binary only parses
//! flags and prints.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::{BudgetRule, ExperimentConfig, MaskRule};
pub use error::{CliError, CliResult};
pub use pipeline::{ReportRow, RunParams};
