//! Experiment harness for the architecture searches in `resn`.
//!
//! An [`ExperimentConfig`] names a problem, the search settings and the methods to
//! compare. [`run_experiment`] executes every method × repetition with seed
//! `base_seed + repetition`, [`summarize`] and [`wilcoxon_rank_sum`] condense the
//! records, and [`emit_report`] renders them as CSV tables.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod stats;

pub use config::{ExperimentConfig, Method, Problem};
pub use error::{BenchError, Result};
pub use report::{emit_report, read_runs};
pub use runner::{run_experiment, run_single, Metric, RunOutput, RunRecord};
pub use stats::{rank_sum_exact, rank_sum_normal, summarize, wilcoxon_rank_sum, Summary};
