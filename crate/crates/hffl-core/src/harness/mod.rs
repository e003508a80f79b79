//! Config-driven experiment harness.
//!
//! Declares datasets, hierarchies, model families, and seeds in one TOML
//! file; executes the experiment for each trial seed; persists a run
//! directory from which every reported number can be recomputed.

pub mod config;
pub mod record;
pub mod run;
pub mod summary;

pub use config::{
    BoundsConfig, DatasetConfig, ExperimentConfig, ExperimentKind, LevelsConfig, ModelConfig,
    ShapleyConfig, TrainingConfig,
};
pub use record::{AggregateRow, BoundRow, PhaseRow, RunRecord, ScoreRow, ShapleyRow};
pub use run::{output_root, run_experiment, OUTPUT_ROOT_ENV};
pub use summary::{median, population_std, summarize, SummaryTable};
