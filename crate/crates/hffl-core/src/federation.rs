//! The federated-averaging engine.
//!
//! One communication round broadcasts the current parameters, lets every
//! participant run its local update concurrently, then takes the uniform
//! coordinate-wise mean of the returned parameter vectors. Updates are
//! always reduced in ascending `(level, agent)` order, and each agent's seed
//! is derived from `(run seed, round, level, agent)`, so results are
//! bit-identical no matter how the work is scheduled.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::models::{self, ArchSpec, ParamVector, TrainConfig};
use crate::rng::derive_seed;

const TAG_AGENT: u64 = 0x10;
const TAG_BASELINE_INIT: u64 = 0x11;
const TAG_BASELINE_TRAIN: u64 = 0x12;

/// Identity of an agent: contribution level (1-based) and position within
/// the level (0-based). Orders by `(level, agent)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId {
    pub level: usize,
    pub agent: usize,
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.level, self.agent)
    }
}

/// One federation participant and the training rows it exposes this session.
#[derive(Debug, Clone)]
pub struct Participant {
    pub id: AgentId,
    pub indices: Vec<usize>,
}

/// The participants of one federation session, strictly ordered by
/// `(level, agent)` with no duplicates and no empty-handed members.
#[derive(Debug, Clone)]
pub struct ParticipantSet {
    members: Vec<Participant>,
}

impl ParticipantSet {
    pub fn new(mut members: Vec<Participant>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Participant("empty participant set".into()));
        }
        members.sort_by_key(|p| p.id);
        for pair in members.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Participant(format!(
                    "duplicate participant {}",
                    pair[0].id
                )));
            }
        }
        if let Some(p) = members.iter().find(|p| p.indices.is_empty()) {
            return Err(Error::Participant(format!(
                "participant {} holds no data",
                p.id
            )));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Participant] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.members.iter().map(|p| p.id)
    }
}

/// Record of one communication round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundMetrics {
    /// 1-based round index.
    pub round: usize,
    /// Post-update local loss per participant, canonical order.
    pub agent_loss: Vec<f64>,
    /// Test accuracy of the aggregated model.
    pub test_accuracy: f64,
    /// Test accuracy of each participant's local model right before
    /// aggregation (the per-agent spread), when tracking is enabled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent_accuracy: Option<Vec<f64>>,
    /// Wall-clock duration of the round in seconds. Diagnostic only; never
    /// included in summary artifacts.
    pub duration_secs: f64,
}

/// Engine configuration for a federation session.
#[derive(Debug, Clone, Copy)]
pub struct FederationConfig {
    /// Local work performed by each agent per round.
    pub local: TrainConfig,
    /// Whether to score every agent's local model on the test set each
    /// round (costs one test-set pass per agent per round).
    pub track_agent_accuracy: bool,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            local: TrainConfig::default(),
            track_agent_accuracy: true,
        }
    }
}

/// One agent's local update: `cfg.epochs` passes over its own rows starting
/// from the broadcast parameters, with a fresh optimizer state. Optimizer
/// moments are never federated.
pub fn agent_update(
    w: &ParamVector,
    data: &Dataset,
    indices: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<ParamVector> {
    models::fit(w, data, indices, cfg, seed).map_err(|e| match e {
        Error::EmptyBatch => Error::Participant("agent holds no local data".into()),
        other => other,
    })
}

/// Uniform mean of the updates, reduced in ascending `(level, agent)` order.
///
/// The mean is anchored at the first (canonically ordered) update:
/// `mean = w_0 + (Σ_i (w_i − w_0)) / n`. Anchoring keeps aggregation exactly
/// idempotent — identical inputs aggregate to themselves bit-for-bit — while
/// agreeing with the plain mean to rounding error.
pub fn aggregate(updates: &[(AgentId, ParamVector)]) -> Result<ParamVector> {
    if updates.is_empty() {
        return Err(Error::Aggregation("no updates to aggregate".into()));
    }
    let mut order: Vec<usize> = (0..updates.len()).collect();
    order.sort_by_key(|&i| updates[i].0);
    for pair in order.windows(2) {
        if updates[pair[0]].0 == updates[pair[1]].0 {
            return Err(Error::Aggregation(format!(
                "duplicate update from agent {}",
                updates[pair[0]].0
            )));
        }
    }

    let anchor = &updates[order[0]].1;
    for &i in &order[1..] {
        let p = &updates[i].1;
        if p.arch() != anchor.arch() {
            return Err(Error::Aggregation(format!(
                "mixed architectures: {} from {} vs {} from {}",
                anchor.arch().label(),
                updates[order[0]].0,
                p.arch().label(),
                updates[i].0
            )));
        }
    }

    let n = updates.len() as f64;
    let mut acc = vec![0.0; anchor.len()];
    for &i in &order[1..] {
        let v = updates[i].1.values();
        let base = anchor.values();
        for k in 0..acc.len() {
            acc[k] += v[k] - base[k];
        }
    }
    let mut out = anchor.values().to_vec();
    for k in 0..out.len() {
        out[k] += acc[k] / n;
    }
    ParamVector::new(anchor.arch().clone(), out)
}

/// Runs `rounds` communication rounds: broadcast, concurrent local updates,
/// aggregate, score. Returns the final parameters and per-round metrics.
/// Any participant or aggregation failure aborts the session, tagged with
/// the failing round index.
pub fn run_federation(
    init: &ParamVector,
    participants: &ParticipantSet,
    data: &Dataset,
    test: &Dataset,
    rounds: usize,
    cfg: &FederationConfig,
    seed: u64,
) -> Result<(ParamVector, Vec<RoundMetrics>)> {
    if rounds == 0 {
        return Err(Error::Config("federation needs at least one round".into()));
    }
    let mut w = init.clone();
    let mut metrics = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        let started = Instant::now();
        let results: Vec<(AgentId, ParamVector, f64, Option<f64>)> = participants
            .members()
            .par_iter()
            .map(|p| {
                let agent_seed = derive_seed(
                    seed,
                    &[TAG_AGENT, round as u64, p.id.level as u64, p.id.agent as u64],
                );
                let local = agent_update(&w, data, &p.indices, &cfg.local, agent_seed)?;
                let loss = models::mean_loss(&local, data, &p.indices)?;
                let acc = if cfg.track_agent_accuracy {
                    Some(models::score(&local, test)?)
                } else {
                    None
                };
                Ok((p.id, local, loss, acc))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Round {
                round,
                source: Box::new(e),
            })?;

        let updates: Vec<(AgentId, ParamVector)> =
            results.iter().map(|(id, p, _, _)| (*id, p.clone())).collect();
        w = aggregate(&updates).map_err(|e| Error::Round {
            round,
            source: Box::new(e),
        })?;

        let test_accuracy = models::score(&w, test).map_err(|e| Error::Round {
            round,
            source: Box::new(e),
        })?;
        let agent_accuracy = if cfg.track_agent_accuracy {
            Some(results.iter().map(|r| r.3.unwrap()).collect())
        } else {
            None
        };
        metrics.push(RoundMetrics {
            round,
            agent_loss: results.iter().map(|r| r.2).collect(),
            test_accuracy,
            agent_accuracy,
            duration_secs: started.elapsed().as_secs_f64(),
        });
    }
    Ok((w, metrics))
}

/// The round-0 comparison point: every agent trains alone from one shared
/// fresh initialization. All agents use the same derived seed, so agents
/// holding identical data come out with identical models; the spread across
/// agents then reflects data differences only.
pub fn local_baseline(
    participants: &ParticipantSet,
    data: &Dataset,
    test: &Dataset,
    arch: &ArchSpec,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<(AgentId, f64)>> {
    let w0 = models::init_params(arch, derive_seed(seed, &[TAG_BASELINE_INIT]));
    let train_seed = derive_seed(seed, &[TAG_BASELINE_TRAIN]);
    participants
        .members()
        .par_iter()
        .map(|p| {
            let local = agent_update(&w0, data, &p.indices, cfg, train_seed)?;
            Ok((p.id, models::score(&local, test)?))
        })
        .collect()
}
