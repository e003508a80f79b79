//! Hierarchically fair federated learning.
//!
//! This crate simulates federations in which agents sit at pre-negotiated
//! contribution levels and are rewarded in proportion to what they bring:
//! one model is trained per level, each level's session warm-starts from the
//! level below and trains on strictly more data. Around that core sit the
//! pieces needed to study the scheme end to end:
//!
//! - [`datagen`] — synthetic blob datasets, an IDX image-file loader, and
//!   seeded per-agent/per-level data partitioning.
//! - [`models`] — a small from-scratch model family (logistic regression and
//!   MLPs) over flat parameter vectors, with cross-entropy loss, backprop
//!   gradients, Adam, and accuracy scoring.
//! - [`federation`] — the averaging engine: broadcast, concurrent local
//!   updates, deterministic aggregation, plus a local-only baseline.
//! - [`hffl`] — the hierarchical orchestrator and its model-sweep variant
//!   that picks the best architecture per level.
//! - [`valuation`] — exact data-Shapley and leave-one-out valuation over
//!   deterministic learners, for contrasting model-dependent valuations with
//!   level-based rewards.
//! - [`bounds`] — the finite-family Hoeffding/union-bound calculator and an
//!   empirical generalization-gap checker.
//! - [`harness`] — config-driven experiment runner with reproducible,
//!   self-contained run directories.
//!
//! Everything is deterministic given a seed: concurrent work is scheduled
//! freely but reduced in a canonical order, so repeated runs produce
//! identical artifacts.

pub mod bounds;
pub mod datagen;
pub mod error;
pub mod federation;
pub mod harness;
pub mod hffl;
pub mod models;
pub mod rng;
pub mod valuation;

pub use bounds::BoundQuery;
pub use datagen::{Dataset, LevelSubsample, Partition};
pub use error::{Error, Result};
pub use federation::{AgentId, Participant, ParticipantSet, RoundMetrics};
pub use harness::{ExperimentConfig, RunRecord};
pub use hffl::{HfflPlusReport, LevelConfig, LevelReport, LevelSpec};
pub use models::{Activation, ArchSpec, ParamVector, TrainConfig};
pub use valuation::{CoalitionGame, LearnerSpec, ShapleyReport};
