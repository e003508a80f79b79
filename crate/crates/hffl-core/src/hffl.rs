//! Hierarchical orchestration: one federation session per contribution
//! level, each warm-started from the level below.
//!
//! A level-`l` session involves every agent at levels `l..=L`; each
//! participant trains on exactly `m_l` of its own examples (its frozen
//! level-`l` subsample), so higher levels train on strictly more data both
//! per agent and in aggregate. The model-sweep variant repeats the whole
//! hierarchy once per candidate architecture and keeps the best scorer per
//! level.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, LevelSubsample, Partition};
use crate::error::{Error, Result};
use crate::federation::{
    run_federation, AgentId, FederationConfig, Participant, ParticipantSet, RoundMetrics,
};
use crate::models::{self, ArchSpec, ParamVector};
use crate::rng::derive_seed;

const TAG_INIT: u64 = 0x20;
const TAG_LEVEL: u64 = 0x21;
const TAG_FAMILY: u64 = 0x22;

/// One contribution level: how many agents sit there and the per-agent data
/// quota `m_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub agents: usize,
    pub quota: usize,
}

/// The declared contribution hierarchy: `L ≥ 1` levels with strictly
/// increasing per-agent quotas `m_1 < m_2 < … < m_L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelConfig {
    levels: Vec<LevelSpec>,
}

impl LevelConfig {
    pub fn new(levels: Vec<LevelSpec>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("hierarchy needs at least one level".into()));
        }
        if let Some((i, _)) = levels.iter().enumerate().find(|(_, s)| s.agents == 0) {
            return Err(Error::Config(format!("level {} has no agents", i + 1)));
        }
        if let Some((i, _)) = levels.iter().enumerate().find(|(_, s)| s.quota == 0) {
            return Err(Error::Config(format!("level {} has a zero quota", i + 1)));
        }
        if let Some(w) = levels.windows(2).position(|w| w[0].quota >= w[1].quota) {
            return Err(Error::Config(format!(
                "quotas must strictly increase with level: m_{} = {} >= m_{} = {}",
                w + 1,
                levels[w].quota,
                w + 2,
                levels[w + 1].quota
            )));
        }
        Ok(Self { levels })
    }

    /// Convenience constructor from `(agents, quota)` pairs in level order.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(agents, quota)| LevelSpec { agents, quota })
                .collect(),
        )
    }

    /// Number of levels L.
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[LevelSpec] {
        &self.levels
    }

    /// Iterates `(level, spec)` with 1-based levels.
    pub fn enumerate(&self) -> impl Iterator<Item = (usize, LevelSpec)> + '_ {
        self.levels.iter().enumerate().map(|(i, s)| (i + 1, *s))
    }

    /// `N_l` for a 1-based level.
    pub fn agents_at(&self, level: usize) -> usize {
        self.levels[level - 1].agents
    }

    /// `m_l` for a 1-based level.
    pub fn quota(&self, level: usize) -> usize {
        self.levels[level - 1].quota
    }

    /// Total data the hierarchy consumes: `Σ_l N_l · m_l`.
    pub fn total_required(&self) -> usize {
        self.levels.iter().map(|s| s.agents * s.quota).sum()
    }

    /// Examples actively trained on during the level-`l` session:
    /// `(N_l + … + N_L) · m_l`.
    pub fn active_data(&self, level: usize) -> usize {
        let participants: usize = self.levels[level - 1..].iter().map(|s| s.agents).sum();
        participants * self.quota(level)
    }

    /// Cumulative exposure of the level-`l` model: everything its warm-start
    /// chain trained on plus the active session data,
    /// `N_1·m_1 + … + N_{l−1}·m_{l−1} + (N_l + … + N_L)·m_l`.
    pub fn cumulative_data(&self, level: usize) -> usize {
        let warm: usize = self.levels[..level - 1]
            .iter()
            .map(|s| s.agents * s.quota)
            .sum();
        warm + self.active_data(level)
    }

    /// All agents in canonical order.
    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.enumerate()
            .flat_map(|(level, s)| (0..s.agents).map(move |agent| AgentId { level, agent }))
    }

    /// Agents participating in a level-`l` session: everyone at `l..=L`.
    pub fn participants_at(&self, level: usize) -> impl Iterator<Item = AgentId> + '_ {
        self.agent_ids().filter(move |id| id.level >= level)
    }
}

/// Outcome of one level's federation session.
#[derive(Debug, Clone)]
pub struct LevelReport {
    /// 1-based level.
    pub level: usize,
    /// Final parameters of the level's model.
    pub params: ParamVector,
    /// Test accuracy of the final model.
    pub score: f64,
    /// Examples actively trained on during this session.
    pub active_data: usize,
    /// Active data plus everything inherited through warm starts.
    pub cumulative_data: usize,
    /// Level whose final model seeded this session (0 = fresh init).
    pub warm_start_level: usize,
    /// Per-round metrics.
    pub rounds: Vec<RoundMetrics>,
}

/// Builds the participant set for a level-`l` session: all agents at levels
/// `l..=L`, each exposing its frozen level-`l` subsample.
pub fn session_participants(
    levels: &LevelConfig,
    subs: &LevelSubsample,
    level: usize,
) -> Result<ParticipantSet> {
    if level == 0 || level > levels.level_count() {
        return Err(Error::Config(format!(
            "level {level} outside hierarchy of {} levels",
            levels.level_count()
        )));
    }
    let members = levels
        .participants_at(level)
        .map(|id| {
            Ok(Participant {
                id,
                indices: subs.for_level(id, level)?.to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ParticipantSet::new(members)
}

/// Runs the full hierarchy: for `l = 1..=L`, warm-start from the previous
/// level's final model (level 1 starts from a fresh initialization), run
/// `rounds` communication rounds with all agents at levels `≥ l`, and report
/// per level. A failed level aborts the rest, since they depend on its
/// warm start.
#[allow(clippy::too_many_arguments)]
pub fn run_hffl(
    levels: &LevelConfig,
    part: &Partition,
    subs: &LevelSubsample,
    arch: &ArchSpec,
    data: &Dataset,
    test: &Dataset,
    rounds: usize,
    cfg: &FederationConfig,
    seed: u64,
) -> Result<Vec<LevelReport>> {
    part.matches(levels)?;
    let mut current = models::init_params(arch, derive_seed(seed, &[TAG_INIT]));
    let mut reports = Vec::with_capacity(levels.level_count());
    for level in 1..=levels.level_count() {
        let participants = session_participants(levels, subs, level)?;
        let session_seed = derive_seed(seed, &[TAG_LEVEL, level as u64]);
        let (final_params, round_metrics) = run_federation(
            &current,
            &participants,
            data,
            test,
            rounds,
            cfg,
            session_seed,
        )?;
        let score = models::score(&final_params, test)?;
        reports.push(LevelReport {
            level,
            params: final_params.clone(),
            score,
            active_data: levels.active_data(level),
            cumulative_data: levels.cumulative_data(level),
            warm_start_level: level - 1,
            rounds: round_metrics,
        });
        current = final_params;
    }
    Ok(reports)
}

/// A family member that failed during the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFailure {
    pub family_index: usize,
    pub arch: String,
    pub message: String,
}

/// Per-level winner of the model sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelWinner {
    pub level: usize,
    pub family_index: usize,
    pub arch: String,
    pub score: f64,
}

/// Outcome of the model sweep: every family member's full hierarchy run
/// plus the per-level winners.
#[derive(Debug, Clone)]
pub struct HfflPlusReport {
    /// Architecture labels in declared family order.
    pub family: Vec<String>,
    /// One hierarchy run per family member; `None` if that member failed.
    pub runs: Vec<Option<Vec<LevelReport>>>,
    pub failures: Vec<FamilyFailure>,
    /// Winner per level: the highest score, ties broken by earliest family
    /// position.
    pub winners: Vec<LevelWinner>,
}

/// Flat score-table row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRow {
    pub level: usize,
    pub arch: String,
    pub score: f64,
}

impl HfflPlusReport {
    /// The flat `(level, arch, score)` table over all completed runs,
    /// ordered by level then family position.
    pub fn score_table(&self) -> Vec<ScoreRow> {
        let mut rows = Vec::new();
        let level_count = self
            .runs
            .iter()
            .flatten()
            .map(|r| r.len())
            .next()
            .unwrap_or(0);
        for level in 1..=level_count {
            for (k, run) in self.runs.iter().enumerate() {
                if let Some(reports) = run {
                    rows.push(ScoreRow {
                        level,
                        arch: self.family[k].clone(),
                        score: reports[level - 1].score,
                    });
                }
            }
        }
        rows
    }

    /// The winner for a 1-based level.
    pub fn winner(&self, level: usize) -> &LevelWinner {
        &self.winners[level - 1]
    }

    /// Structured JSON document: winners, score table, and failures.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family,
            "winners": self.winners,
            "scores": self.score_table(),
            "failures": self.failures,
        })
    }

    /// Flat CSV score table: `level,arch,score`.
    pub fn write_score_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "level,arch,score")?;
        for row in self.score_table() {
            writeln!(w, "{},{},{}", row.level, row.arch, row.score)?;
        }
        Ok(())
    }
}

/// Picks per-level winners from per-member scores (`None` = member failed).
/// Highest score wins; exact ties go to the earliest family position.
fn select_winners(family: &[String], scores: &[Option<Vec<f64>>]) -> Vec<LevelWinner> {
    let level_count = scores.iter().flatten().map(|s| s.len()).next().unwrap_or(0);
    (1..=level_count)
        .map(|level| {
            let mut best: Option<(usize, f64)> = None;
            for (k, member) in scores.iter().enumerate() {
                if let Some(s) = member {
                    let score = s[level - 1];
                    if best.map_or(true, |(_, b)| score > b) {
                        best = Some((k, score));
                    }
                }
            }
            let (family_index, score) = best.expect("at least one member completed");
            LevelWinner {
                level,
                family_index,
                arch: family[family_index].clone(),
                score,
            }
        })
        .collect()
}

/// Runs the hierarchy once per family member over the same partition and
/// subsamples — architecture is the only varying factor — and selects the
/// best scorer per level. A failing member is recorded and excluded; the
/// sweep fails only if every member fails.
#[allow(clippy::too_many_arguments)]
pub fn run_hffl_plus(
    levels: &LevelConfig,
    part: &Partition,
    subs: &LevelSubsample,
    family: &[ArchSpec],
    data: &Dataset,
    test: &Dataset,
    rounds: usize,
    cfg: &FederationConfig,
    seed: u64,
) -> Result<HfflPlusReport> {
    if family.is_empty() {
        return Err(Error::Config("model family is empty".into()));
    }
    let labels: Vec<String> = family.iter().map(|a| a.label()).collect();
    let outcomes: Vec<Result<Vec<LevelReport>>> = family
        .par_iter()
        .enumerate()
        .map(|(k, arch)| {
            let member_seed = derive_seed(seed, &[TAG_FAMILY, k as u64]);
            run_hffl(levels, part, subs, arch, data, test, rounds, cfg, member_seed)
        })
        .collect();

    let mut runs = Vec::with_capacity(family.len());
    let mut failures = Vec::new();
    for (k, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(reports) => runs.push(Some(reports)),
            Err(e) => {
                failures.push(FamilyFailure {
                    family_index: k,
                    arch: labels[k].clone(),
                    message: e.to_string(),
                });
                runs.push(None);
            }
        }
    }
    if runs.iter().all(|r| r.is_none()) {
        return Err(Error::Config(format!(
            "every family member failed; first failure: {}",
            failures[0].message
        )));
    }
    let scores: Vec<Option<Vec<f64>>> = runs
        .iter()
        .map(|r| r.as_ref().map(|reports| reports.iter().map(|x| x.score).collect()))
        .collect();
    let winners = select_winners(&labels, &scores);
    Ok(HfflPlusReport {
        family: labels,
        runs,
        failures,
        winners,
    })
}

/// Moves an agent to a higher level, provided it can actually meet the
/// target quota. This is bookkeeping only — approval and compensation
/// happen out of band — and a move that would empty the source level is
/// rejected because every level must keep at least one agent.
pub fn promote(
    levels: &LevelConfig,
    agent: AgentId,
    to_level: usize,
    available_data: usize,
) -> Result<LevelConfig> {
    let level_count = levels.level_count();
    if agent.level == 0 || agent.level > level_count {
        return Err(Error::Promotion(format!(
            "agent {agent} is outside the {level_count}-level hierarchy"
        )));
    }
    if agent.agent >= levels.agents_at(agent.level) {
        return Err(Error::Promotion(format!(
            "level {} has only {} agents, no agent #{}",
            agent.level,
            levels.agents_at(agent.level),
            agent.agent
        )));
    }
    if to_level <= agent.level || to_level > level_count {
        return Err(Error::Promotion(format!(
            "target level {to_level} must lie above {} and within the hierarchy",
            agent.level
        )));
    }
    let needed = levels.quota(to_level);
    if available_data < needed {
        return Err(Error::Promotion(format!(
            "agent {agent} holds {available_data} examples but level {to_level} requires {needed}"
        )));
    }
    if levels.agents_at(agent.level) == 1 {
        return Err(Error::Promotion(format!(
            "promoting agent {agent} would leave level {} empty",
            agent.level
        )));
    }
    let mut specs = levels.levels().to_vec();
    specs[agent.level - 1].agents -= 1;
    specs[to_level - 1].agents += 1;
    LevelConfig::new(specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_blobs, level_subsample, partition, ring_centers};
    use crate::models::Activation;

    /// Small three-level layout used throughout: N=(3,4,3), m=(2,5,10).
    fn toy_levels() -> LevelConfig {
        LevelConfig::from_pairs(&[(3, 2), (4, 5), (3, 10)]).unwrap()
    }

    fn toy_setup(seed: u64) -> (LevelConfig, Dataset, Dataset, Partition, LevelSubsample) {
        let levels = toy_levels();
        let data = generate_blobs(3, 30, &ring_centers(3, 6.0), 1.0, seed).unwrap();
        let test = generate_blobs(3, 20, &ring_centers(3, 6.0), 1.0, seed ^ 0xFF).unwrap();
        let part = partition(&data, &levels, seed).unwrap();
        let subs = level_subsample(&part, &levels, seed ^ 1).unwrap();
        (levels, data, test, part, subs)
    }

    #[test]
    fn level_config_rejects_bad_shapes() {
        assert!(LevelConfig::from_pairs(&[]).is_err());
        assert!(LevelConfig::from_pairs(&[(0, 5)]).is_err());
        assert!(LevelConfig::from_pairs(&[(1, 0)]).is_err());
        assert!(LevelConfig::from_pairs(&[(1, 5), (1, 5)]).is_err());
        assert!(LevelConfig::from_pairs(&[(1, 5), (1, 3)]).is_err());
        assert!(LevelConfig::from_pairs(&[(1, 5), (1, 6)]).is_ok());
    }

    #[test]
    fn data_counting_matches_the_hierarchy_formulas() {
        let levels = toy_levels();
        assert_eq!(levels.total_required(), 3 * 2 + 4 * 5 + 3 * 10);
        assert_eq!(levels.active_data(1), (3 + 4 + 3) * 2); // 20
        assert_eq!(levels.active_data(2), (4 + 3) * 5); // 35
        assert_eq!(levels.active_data(3), 3 * 10); // 30
        assert_eq!(levels.cumulative_data(1), 20);
        assert_eq!(levels.cumulative_data(2), 3 * 2 + 35); // 41
        assert_eq!(levels.cumulative_data(3), 3 * 2 + 4 * 5 + 30); // 56
        // Cumulative exposure strictly increases with level.
        assert!(levels.cumulative_data(1) < levels.cumulative_data(2));
        assert!(levels.cumulative_data(2) < levels.cumulative_data(3));
    }

    #[test]
    fn session_participants_cover_levels_at_and_above() {
        let (levels, _, _, _, subs) = toy_setup(5);
        let session = session_participants(&levels, &subs, 2).unwrap();
        assert_eq!(session.len(), 4 + 3);
        for p in session.members() {
            assert!(p.id.level >= 2);
            assert_eq!(p.indices.len(), levels.quota(2), "everyone trains on m_2");
        }
        let level1 = session_participants(&levels, &subs, 1).unwrap();
        assert_eq!(level1.len(), 10);
        assert!(level1.members().iter().all(|p| p.indices.len() == 2));
    }

    #[test]
    fn single_level_hierarchy_degenerates_to_plain_federation() {
        let levels = LevelConfig::from_pairs(&[(4, 15)]).unwrap();
        let data = generate_blobs(3, 30, &ring_centers(3, 6.0), 1.0, 8).unwrap();
        let test = generate_blobs(3, 20, &ring_centers(3, 6.0), 1.0, 9).unwrap();
        let part = partition(&data, &levels, 3).unwrap();
        let subs = level_subsample(&part, &levels, 4).unwrap();
        let arch = ArchSpec::logistic(2, 3).unwrap();
        let cfg = FederationConfig::default();
        let seed = 42;

        let reports =
            run_hffl(&levels, &part, &subs, &arch, &data, &test, 3, &cfg, seed).unwrap();
        assert_eq!(reports.len(), 1);

        // Oracle: the same session driven through run_federation directly,
        // with the orchestrator's derived seeds.
        let init = models::init_params(&arch, derive_seed(seed, &[TAG_INIT]));
        let participants = session_participants(&levels, &subs, 1).unwrap();
        let (direct, _) = run_federation(
            &init,
            &participants,
            &data,
            &test,
            3,
            &cfg,
            derive_seed(seed, &[TAG_LEVEL, 1]),
        )
        .unwrap();
        assert_eq!(reports[0].params.values(), direct.values());
    }

    #[test]
    fn warm_start_chain_is_bit_exact() {
        let (levels, data, test, part, subs) = toy_setup(12);
        let arch = ArchSpec::logistic(2, 3).unwrap();
        let cfg = FederationConfig::default();
        let seed = 7;
        let reports =
            run_hffl(&levels, &part, &subs, &arch, &data, &test, 2, &cfg, seed).unwrap();
        assert_eq!(reports.len(), 3);
        assert_eq!(reports[1].warm_start_level, 1);

        // Re-run level 2 by hand from level 1's final parameters.
        let participants = session_participants(&levels, &subs, 2).unwrap();
        let (redo, _) = run_federation(
            &reports[0].params,
            &participants,
            &data,
            &test,
            2,
            &cfg,
            derive_seed(seed, &[TAG_LEVEL, 2]),
        )
        .unwrap();
        assert_eq!(reports[1].params.values(), redo.values());
    }

    #[test]
    fn reports_expose_active_and_cumulative_counts() {
        let (levels, data, test, part, subs) = toy_setup(13);
        let arch = ArchSpec::logistic(2, 3).unwrap();
        let reports = run_hffl(
            &levels,
            &part,
            &subs,
            &arch,
            &data,
            &test,
            1,
            &FederationConfig::default(),
            3,
        )
        .unwrap();
        assert_eq!(
            reports.iter().map(|r| r.active_data).collect::<Vec<_>>(),
            vec![20, 35, 30]
        );
        assert_eq!(
            reports.iter().map(|r| r.cumulative_data).collect::<Vec<_>>(),
            vec![20, 41, 56]
        );
    }

    #[test]
    fn sweep_with_family_of_one_matches_plain_hierarchy() {
        let (levels, data, test, part, subs) = toy_setup(14);
        let arch = ArchSpec::logistic(2, 3).unwrap();
        let cfg = FederationConfig::default();
        let seed = 5;
        let plus = run_hffl_plus(
            &levels,
            &part,
            &subs,
            std::slice::from_ref(&arch),
            &data,
            &test,
            2,
            &cfg,
            seed,
        )
        .unwrap();
        let direct = run_hffl(
            &levels,
            &part,
            &subs,
            &arch,
            &data,
            &test,
            2,
            &cfg,
            derive_seed(seed, &[TAG_FAMILY, 0]),
        )
        .unwrap();
        let run = plus.runs[0].as_ref().unwrap();
        for (a, b) in run.iter().zip(&direct) {
            assert_eq!(a.params.values(), b.params.values());
            assert_eq!(a.score, b.score);
        }
        for w in &plus.winners {
            assert_eq!(w.family_index, 0);
        }
    }

    #[test]
    fn winners_take_the_max_with_earliest_position_on_ties() {
        let family = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let scores = vec![
            Some(vec![0.5, 0.9]),
            Some(vec![0.5, 0.95]),
            Some(vec![0.4, 0.95]),
        ];
        let winners = select_winners(&family, &scores);
        // Level 1: tie between a and b at 0.5 -> earliest (a).
        assert_eq!(winners[0].family_index, 0);
        // Level 2: tie between b and c at 0.95 -> earliest (b).
        assert_eq!(winners[1].family_index, 1);
        assert_eq!(winners[1].score, 0.95);
    }

    #[test]
    fn sweep_winner_score_is_the_table_max() {
        let (levels, data, test, part, subs) = toy_setup(15);
        let family = vec![
            ArchSpec::logistic(2, 3).unwrap(),
            ArchSpec::mlp(2, &[8], 3, Activation::Relu).unwrap(),
        ];
        let plus = run_hffl_plus(
            &levels,
            &part,
            &subs,
            &family,
            &data,
            &test,
            2,
            &FederationConfig::default(),
            11,
        )
        .unwrap();
        for level in 1..=levels.level_count() {
            let table_max = plus
                .score_table()
                .into_iter()
                .filter(|r| r.level == level)
                .map(|r| r.score)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(plus.winner(level).score, table_max);
        }
    }

    #[test]
    fn failing_family_member_is_excluded_not_fatal() {
        let (levels, data, test, part, subs) = toy_setup(16);
        // Wrong input dimension: this member fails at the first round.
        let family = vec![
            ArchSpec::logistic(5, 3).unwrap(),
            ArchSpec::logistic(2, 3).unwrap(),
        ];
        let plus = run_hffl_plus(
            &levels,
            &part,
            &subs,
            &family,
            &data,
            &test,
            2,
            &FederationConfig::default(),
            4,
        )
        .unwrap();
        assert!(plus.runs[0].is_none());
        assert!(plus.runs[1].is_some());
        assert_eq!(plus.failures.len(), 1);
        assert_eq!(plus.failures[0].family_index, 0);
        assert!(plus.winners.iter().all(|w| w.family_index == 1));
    }

    #[test]
    fn sweep_fails_only_when_every_member_fails() {
        let (levels, data, test, part, subs) = toy_setup(17);
        let family = vec![ArchSpec::logistic(9, 3).unwrap()];
        let err = run_hffl_plus(
            &levels,
            &part,
            &subs,
            &family,
            &data,
            &test,
            1,
            &FederationConfig::default(),
            4,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn promotion_updates_agent_counts() {
        let levels = toy_levels();
        let promoted = promote(&levels, AgentId { level: 1, agent: 0 }, 2, 5).unwrap();
        assert_eq!(
            promoted
                .levels()
                .iter()
                .map(|s| s.agents)
                .collect::<Vec<_>>(),
            vec![2, 5, 3]
        );
        // Quotas are untouched; the level-2 session now has (5+3)*5 active.
        assert_eq!(promoted.active_data(2), (5 + 3) * 5);
    }

    #[test]
    fn promotion_requires_enough_data() {
        let levels = toy_levels();
        let err = promote(&levels, AgentId { level: 1, agent: 0 }, 3, 9).unwrap_err();
        assert!(matches!(err, Error::Promotion(_)), "{err}");
        assert!(promote(&levels, AgentId { level: 1, agent: 0 }, 3, 10).is_ok());
    }

    #[test]
    fn promotion_rejects_downgrades_and_empty_levels() {
        let levels = toy_levels();
        assert!(promote(&levels, AgentId { level: 2, agent: 0 }, 1, 100).is_err());
        assert!(promote(&levels, AgentId { level: 2, agent: 0 }, 2, 100).is_err());
        assert!(promote(&levels, AgentId { level: 1, agent: 9 }, 2, 100).is_err());

        let thin = LevelConfig::from_pairs(&[(1, 2), (1, 5)]).unwrap();
        let err = promote(&thin, AgentId { level: 1, agent: 0 }, 2, 10).unwrap_err();
        assert!(matches!(err, Error::Promotion(_)), "{err}");
    }

    #[test]
    fn score_csv_lists_level_arch_score() {
        let (levels, data, test, part, subs) = toy_setup(18);
        let family = vec![ArchSpec::logistic(2, 3).unwrap()];
        let plus = run_hffl_plus(
            &levels,
            &part,
            &subs,
            &family,
            &data,
            &test,
            1,
            &FederationConfig::default(),
            6,
        )
        .unwrap();
        let mut buf = Vec::new();
        plus.write_score_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("level,arch,score"));
        assert_eq!(lines.count(), 3);
    }
}
