//! Experiment runner behind the `sors` binary.
//!
//! [`train`] runs one learner and writes a learning curve, the final model
//! and an evaluation report; [`evaluate`] scores a saved model; [`bench`]
//! replays one seeded triplet stream through several learners and tabulates
//! them.

pub mod commands;
pub mod config;

pub use commands::{bench, evaluate, train, BenchRow, EvalArgs, EvalSplit, TrainOutcome};
pub use config::{ConfigLayer, ExperimentConfig};

/// Bad flags, config values or hyperparameters. The binary exits with
/// status 2 for these, and 1 for every other failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}
