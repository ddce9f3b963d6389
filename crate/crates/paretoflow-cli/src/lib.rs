//! Experiment harness for the paretoflow toolkit: configuration loading,
//! training orchestration, metric reports, heatmaps, and front
//! comparisons, shared between the binary and the integration tests.

pub mod compare;
pub mod config;
pub mod harness;
pub mod heatmap;

pub use compare::{compare_fronts, CompareRow};
pub use config::{BuiltEnv, ConfigError, ExperimentConfig};
pub use harness::{run_experiment, ExperimentOutcome, HarnessError, TableRow};
pub use heatmap::{emit_rank_heatmap, rank_heatmap, HeatmapMethod, HeatmapReward};
