//! The experiment runner: executes a resolved config, writes a
//! self-contained run directory, and returns the run record.
//!
//! Directory layout:
//!
//! ```text
//! <output_root>/<output_dir>/
//!   config.toml          resolved config (defaults included)
//!   record.json          raw per-trial numbers + aggregates + checksums
//!   summary.csv          the run's headline table
//!   trial_<k>/           per-trial artifacts (checkpoints, round records,
//!                        score tables, valuation CSVs)
//!   FAILED               present only if the run aborted mid-way
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::bounds::{self, BoundQuery, GapConfig, GapMetric};
use crate::datagen::{self, Dataset};
use crate::error::{Error, Result};
use crate::federation::{
    local_baseline, run_federation, Participant, ParticipantSet, RoundMetrics,
};
use crate::hffl::{run_hffl, run_hffl_plus, LevelConfig, LevelReport};
use crate::models::{self, ArchSpec};
use crate::rng::derive_seed;
use crate::valuation::{self};

use super::config::{ExperimentConfig, ExperimentKind};
use super::record::{
    checksum_files, AggregateRow, BoundRow, PhaseRow, RunRecord, ScoreRow, ShapleyRow,
};
use super::summary::{median, population_std};

const TAG_TRIAL: u64 = 0x50;
const TAG_PARTITION: u64 = 0x51;
const TAG_SUBSAMPLE: u64 = 0x52;
const TAG_RUN: u64 = 0x53;
const TAG_OWNERSHIP: u64 = 0x54;

/// Environment variable overriding the output root directory.
pub const OUTPUT_ROOT_ENV: &str = "HFFL_OUTPUT_ROOT";

/// The directory run directories are created under: the environment
/// override when set, otherwise the current directory.
pub fn output_root() -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root),
        _ => PathBuf::from("."),
    }
}

/// Output of one trial: rows for the record plus files already written.
#[derive(Debug, Default)]
struct TrialOutput {
    score_rows: Vec<ScoreRow>,
    shapley_rows: Vec<ShapleyRow>,
    phase_rows: Vec<PhaseRow>,
    files: Vec<String>,
}

/// Runs a validated experiment, writing everything under
/// `output_root/<cfg.output_dir>`. A mid-run failure leaves partial results
/// plus a `FAILED` marker and propagates the error.
pub fn run_experiment(cfg: &ExperimentConfig, output_root: &Path) -> Result<RunRecord> {
    let mut cfg = cfg.clone();
    cfg.resolve();
    cfg.validate()?;

    let run_dir = output_root.join(&cfg.output_dir);
    std::fs::create_dir_all(&run_dir)?;
    std::fs::write(run_dir.join("config.toml"), cfg.to_toml()?)?;
    // A fresh run clears any stale failure marker.
    let _ = std::fs::remove_file(run_dir.join("FAILED"));

    match execute(&cfg, &run_dir) {
        Ok(record) => Ok(record),
        Err(e) => {
            let _ = std::fs::write(run_dir.join("FAILED"), format!("{e}\n"));
            Err(e)
        }
    }
}

fn execute(cfg: &ExperimentConfig, run_dir: &Path) -> Result<RunRecord> {
    let outputs: Vec<TrialOutput> = match cfg.kind {
        ExperimentKind::FederationBaseline => run_trials(cfg, run_dir, baseline_trial)?,
        ExperimentKind::Hffl | ExperimentKind::HfflPlus => {
            run_trials(cfg, run_dir, hierarchy_trial)?
        }
        ExperimentKind::Shapley => run_trials(cfg, run_dir, shapley_trial)?,
        ExperimentKind::Bounds => vec![bounds_run(cfg, run_dir)?],
    };

    let mut record = RunRecord {
        kind: cfg.kind,
        config: cfg.clone(),
        score_rows: outputs.iter().flat_map(|o| o.score_rows.clone()).collect(),
        shapley_rows: outputs
            .iter()
            .flat_map(|o| o.shapley_rows.clone())
            .collect(),
        phase_rows: outputs.iter().flat_map(|o| o.phase_rows.clone()).collect(),
        bound_rows: Vec::new(),
        aggregates: Vec::new(),
        checksums: Default::default(),
    };
    if cfg.kind == ExperimentKind::Bounds {
        record.bound_rows = bounds_rows(cfg)?;
    }
    record.aggregates = aggregate(&record);

    let mut files: Vec<String> = outputs.into_iter().flat_map(|o| o.files).collect();
    files.push(write_summary_csv(cfg, run_dir, &record)?);
    files.push("config.toml".to_string());
    files.sort();
    record.checksums = checksum_files(run_dir, &files)?;
    record.save(run_dir)?;
    Ok(record)
}

fn run_trials(
    cfg: &ExperimentConfig,
    run_dir: &Path,
    trial_fn: fn(&ExperimentConfig, &Path, usize) -> Result<TrialOutput>,
) -> Result<Vec<TrialOutput>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let trial_dir = run_dir.join(format!("trial_{trial}"));
            std::fs::create_dir_all(&trial_dir)?;
            trial_fn(cfg, run_dir, trial)
        })
        .collect()
}

fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    derive_seed(cfg.seed, &[TAG_TRIAL, trial as u64])
}

fn rel(trial: usize, name: &str) -> String {
    format!("trial_{trial}/{name}")
}

/// Serializes round metrics as JSON lines tagged with arch and level.
fn append_rounds(
    w: &mut BufWriter<File>,
    arch: &str,
    level: usize,
    rounds: &[RoundMetrics],
) -> Result<()> {
    for m in rounds {
        let line = json!({
            "arch": arch,
            "level": level,
            "round": m.round,
            "agent_loss": m.agent_loss,
            "test_accuracy": m.test_accuracy,
            "agent_accuracy": m.agent_accuracy,
            "duration_secs": m.duration_secs,
        });
        writeln!(w, "{line}").map_err(Error::Io)?;
    }
    Ok(())
}

fn family_archs(cfg: &ExperimentConfig, data: &Dataset) -> Result<Vec<ArchSpec>> {
    cfg.models
        .iter()
        .map(|m| m.to_arch(data.n_features(), data.n_classes()))
        .collect()
}

fn levels_of(cfg: &ExperimentConfig) -> Result<LevelConfig> {
    cfg.levels
        .as_ref()
        .ok_or_else(|| Error::Config("missing [levels] section".into()))?
        .to_levels()
}

fn check_capacity(levels: &LevelConfig, data: &Dataset) -> Result<()> {
    let required = levels.total_required();
    if required > data.len() {
        return Err(Error::Capacity {
            required,
            available: data.len(),
        });
    }
    Ok(())
}

/// One hierarchy trial (plain or family sweep, by `cfg.kind`).
fn hierarchy_trial(cfg: &ExperimentConfig, run_dir: &Path, trial: usize) -> Result<TrialOutput> {
    let seed = trial_seed(cfg, trial);
    let (data, test) = cfg.dataset.build(seed)?;
    let levels = levels_of(cfg)?;
    check_capacity(&levels, &data)?;
    let part = datagen::partition(&data, &levels, derive_seed(seed, &[TAG_PARTITION]))?;
    let subs = datagen::level_subsample(&part, &levels, derive_seed(seed, &[TAG_SUBSAMPLE]))?;
    let family = family_archs(cfg, &data)?;
    let fed_cfg = cfg.training.federation_config()?;
    let run_seed = derive_seed(seed, &[TAG_RUN]);
    let trial_dir = run_dir.join(format!("trial_{trial}"));
    let mut out = TrialOutput::default();
    let rounds_path = trial_dir.join("rounds.jsonl");
    let mut rounds_file = BufWriter::new(File::create(&rounds_path)?);

    let write_level_reports =
        |arch_label: &str, reports: &[LevelReport], rounds_file: &mut BufWriter<File>| -> Result<Vec<ScoreRow>> {
            let mut rows = Vec::new();
            for report in reports {
                append_rounds(rounds_file, arch_label, report.level, &report.rounds)?;
                rows.push(ScoreRow {
                    trial,
                    level: report.level,
                    arch: arch_label.to_string(),
                    score: report.score,
                });
            }
            Ok(rows)
        };

    match cfg.kind {
        ExperimentKind::Hffl => {
            let reports = run_hffl(
                &levels,
                &part,
                &subs,
                &family[0],
                &data,
                &test,
                cfg.training.rounds,
                &fed_cfg,
                run_seed,
            )?;
            out.score_rows =
                write_level_reports(&family[0].label(), &reports, &mut rounds_file)?;
            for report in &reports {
                let name = format!("f_{}.ckpt", report.level);
                models::save_checkpoint(&report.params, &trial_dir.join(&name))?;
                out.files.push(rel(trial, &name));
            }
        }
        ExperimentKind::HfflPlus => {
            let plus = run_hffl_plus(
                &levels,
                &part,
                &subs,
                &family,
                &data,
                &test,
                cfg.training.rounds,
                &fed_cfg,
                run_seed,
            )?;
            for (k, run) in plus.runs.iter().enumerate() {
                if let Some(reports) = run {
                    out.score_rows.extend(write_level_reports(
                        &plus.family[k],
                        reports,
                        &mut rounds_file,
                    )?);
                }
            }
            // Winner checkpoints, one per level.
            for winner in &plus.winners {
                let reports = plus.runs[winner.family_index].as_ref().unwrap();
                let name = format!("f_{}.ckpt", winner.level);
                models::save_checkpoint(
                    &reports[winner.level - 1].params,
                    &trial_dir.join(&name),
                )?;
                out.files.push(rel(trial, &name));
            }
            let report_json = serde_json::to_string_pretty(&plus.to_json())
                .map_err(|e| Error::Record(e.to_string()))?;
            std::fs::write(trial_dir.join("sweep.json"), report_json)?;
            out.files.push(rel(trial, "sweep.json"));
            let mut scores_csv = Vec::new();
            plus.write_score_csv(&mut scores_csv)?;
            std::fs::write(trial_dir.join("scores.csv"), scores_csv)?;
            out.files.push(rel(trial, "scores.csv"));
        }
        _ => unreachable!("hierarchy_trial only runs hffl kinds"),
    }
    rounds_file.flush()?;
    out.files.push(rel(trial, "rounds.jsonl"));
    Ok(out)
}

/// One single-level federation trial with its local-only comparison point.
fn baseline_trial(cfg: &ExperimentConfig, run_dir: &Path, trial: usize) -> Result<TrialOutput> {
    let seed = trial_seed(cfg, trial);
    let (data, test) = cfg.dataset.build(seed)?;
    let levels = levels_of(cfg)?;
    check_capacity(&levels, &data)?;
    let part = datagen::partition(&data, &levels, derive_seed(seed, &[TAG_PARTITION]))?;
    let arch = family_archs(cfg, &data)?[0].clone();
    let mut fed_cfg = cfg.training.federation_config()?;
    // The comparison needs every agent's final local model scored.
    fed_cfg.track_agent_accuracy = true;
    let run_seed = derive_seed(seed, &[TAG_RUN]);

    let participants = ParticipantSet::new(
        part.agents()
            .map(|(id, idx)| Participant {
                id,
                indices: idx.to_vec(),
            })
            .collect(),
    )?;

    let baseline_cfg = cfg.training.local_config(cfg.training.baseline_epochs)?;
    let baseline = local_baseline(&participants, &data, &test, &arch, &baseline_cfg, run_seed)?;
    let baseline_accs: Vec<f64> = baseline.iter().map(|(_, a)| *a).collect();

    let init = models::init_params(&arch, derive_seed(run_seed, &[0]));
    let (final_params, rounds) = run_federation(
        &init,
        &participants,
        &data,
        &test,
        cfg.training.rounds,
        &fed_cfg,
        run_seed,
    )?;
    let final_accs = rounds
        .last()
        .and_then(|m| m.agent_accuracy.clone())
        .expect("tracking enabled");

    let trial_dir = run_dir.join(format!("trial_{trial}"));
    let mut rounds_file = BufWriter::new(File::create(trial_dir.join("rounds.jsonl"))?);
    append_rounds(&mut rounds_file, &arch.label(), 1, &rounds)?;
    rounds_file.flush()?;
    models::save_checkpoint(&final_params, &trial_dir.join("f_1.ckpt"))?;

    let agents_csv = trial_dir.join("agent_accuracy.csv");
    let mut w = BufWriter::new(File::create(&agents_csv)?);
    writeln!(w, "level,agent,local_accuracy,federated_accuracy").map_err(Error::Io)?;
    for ((id, local), federated) in baseline.iter().zip(&final_accs) {
        writeln!(w, "{},{},{local},{federated}", id.level, id.agent).map_err(Error::Io)?;
    }
    w.flush()?;

    Ok(TrialOutput {
        phase_rows: vec![
            PhaseRow {
                trial,
                phase: "local".to_string(),
                median_accuracy: median(&baseline_accs),
                std_accuracy: population_std(&baseline_accs),
            },
            PhaseRow {
                trial,
                phase: "federated".to_string(),
                median_accuracy: median(&final_accs),
                std_accuracy: population_std(&final_accs),
            },
        ],
        files: vec![
            rel(trial, "rounds.jsonl"),
            rel(trial, "f_1.ckpt"),
            rel(trial, "agent_accuracy.csv"),
        ],
        ..TrialOutput::default()
    })
}

/// One valuation trial: fresh demo data, Shapley and optionally
/// leave-one-out per learner.
fn shapley_trial(cfg: &ExperimentConfig, run_dir: &Path, trial: usize) -> Result<TrialOutput> {
    let seed = trial_seed(cfg, trial);
    let sh = cfg.shapley.clone().unwrap_or_default();
    let (data, test) = cfg.dataset.build(seed)?;
    // Round-robin ownership spreads classes across agents (generation is
    // class-major).
    let _ = derive_seed(seed, &[TAG_OWNERSHIP]);
    let ownership: Vec<usize> = (0..data.len()).map(|i| i % sh.agents).collect();
    let learners = sh.parsed_learners()?;

    let trial_dir = run_dir.join(format!("trial_{trial}"));
    let mut out = TrialOutput::default();
    let mut train_csv = Vec::new();
    data.write_csv(&mut train_csv)?;
    std::fs::write(trial_dir.join("train.csv"), train_csv)?;
    out.files.push(rel(trial, "train.csv"));

    for learner in &learners {
        let report = valuation::agent_contribution(&data, &ownership, learner, &test)?;
        let loo = if sh.include_loo {
            Some(valuation::loo_value(&data, &ownership, learner, &test)?)
        } else {
            None
        };
        let name = format!("shapley_{}.csv", learner.label());
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        std::fs::write(trial_dir.join(&name), csv)?;
        out.files.push(rel(trial, &name));
        for (agent, &phi) in report.phi.iter().enumerate() {
            out.shapley_rows.push(ShapleyRow {
                trial,
                learner: learner.label().to_string(),
                agent,
                phi,
                loo: loo.as_ref().map(|l| l[agent]),
            });
        }
    }
    Ok(out)
}

fn bounds_rows(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    let b = cfg
        .bounds
        .as_ref()
        .ok_or_else(|| Error::Config("missing [bounds] section".into()))?;
    let mut rows = Vec::new();
    for &samples in &b.samples {
        for &epsilon in &b.epsilons {
            let q = BoundQuery::new(
                samples,
                epsilon,
                b.family_size,
                (b.loss_range[0], b.loss_range[1]),
            )?;
            rows.push(BoundRow {
                samples,
                epsilon,
                family_size: b.family_size,
                delta: bounds::delta_for(&q),
                violation_rate: None,
            });
        }
    }
    Ok(rows)
}

/// The bounds "trial": the table plus the optional empirical check.
fn bounds_run(cfg: &ExperimentConfig, run_dir: &Path) -> Result<TrialOutput> {
    let b = cfg
        .bounds
        .as_ref()
        .ok_or_else(|| Error::Config("missing [bounds] section".into()))?;
    let mut out = TrialOutput::default();
    if b.empirical {
        let seed = trial_seed(cfg, 0);
        let (pool, test) = cfg.dataset.build(seed)?;
        let family = family_archs(cfg, &pool)?;
        let metric = match b.metric.as_str() {
            "cross-entropy" => GapMetric::CrossEntropy,
            _ => GapMetric::ZeroOne,
        };
        let gap_cfg = GapConfig {
            train_size: b.empirical_train_size,
            trials: b.empirical_trials,
            epsilon: b.empirical_epsilon,
            metric,
            train: cfg.training.local_config(cfg.training.local_epochs)?,
            seed: derive_seed(seed, &[TAG_RUN]),
        };
        let report = bounds::empirical_gap(&pool, &test, &family, &gap_cfg)?;
        let bound = report.bound(b.empirical_train_size, family.len())?;
        let gap_json = serde_json::to_string_pretty(&json!({
            "epsilon": report.epsilon,
            "loss_range": report.loss_range,
            "violation_rate": report.violation_rate,
            "bound": bound,
            "per_trial_max_gap": report.per_trial_max_gap,
        }))
        .map_err(|e| Error::Record(e.to_string()))?;
        let trial_dir = run_dir.join("trial_0");
        std::fs::create_dir_all(&trial_dir)?;
        std::fs::write(trial_dir.join("gap.json"), gap_json)?;
        out.files.push(rel(0, "gap.json"));
    }
    Ok(out)
}

fn aggregate(record: &RunRecord) -> Vec<AggregateRow> {
    use std::collections::BTreeMap;
    let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in &record.score_rows {
        grouped
            .entry(format!("level={},arch={}", row.level, row.arch))
            .or_default()
            .push(row.score);
    }
    for row in &record.shapley_rows {
        grouped
            .entry(format!("learner={},agent={}", row.learner, row.agent))
            .or_default()
            .push(row.phi);
    }
    for row in &record.phase_rows {
        grouped
            .entry(format!("phase={}", row.phase))
            .or_default()
            .push(row.median_accuracy);
    }
    grouped
        .into_iter()
        .map(|(key, values)| AggregateRow {
            key,
            median: median(&values),
            std: population_std(&values),
            count: values.len(),
        })
        .collect()
}

/// The headline summary table for the run directory. Deterministic byte
/// for byte given (config, seed): no timestamps, shortest float repr.
fn write_summary_csv(
    cfg: &ExperimentConfig,
    run_dir: &Path,
    record: &RunRecord,
) -> Result<String> {
    let path = run_dir.join("summary.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    match cfg.kind {
        ExperimentKind::Hffl | ExperimentKind::HfflPlus => {
            use std::collections::BTreeMap;
            let mut grouped: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
            for row in &record.score_rows {
                grouped
                    .entry((row.level, row.arch.clone()))
                    .or_default()
                    .push(row.score);
            }
            // Per-level winner by median score; exact ties go to the
            // earliest family position. Labels do not depend on data dims,
            // so placeholder dims recover the declared order.
            let family_labels: Vec<String> = record
                .config
                .models
                .iter()
                .filter_map(|m| m.to_arch(1, 2).ok().map(|a| a.label()))
                .collect();
            let levels_present: std::collections::BTreeSet<usize> =
                grouped.keys().map(|k| k.0).collect();
            let mut winners: BTreeMap<usize, (String, f64)> = BTreeMap::new();
            for &level in &levels_present {
                let mut best: Option<(String, f64)> = None;
                for label in &family_labels {
                    if let Some(scores) = grouped.get(&(level, label.clone())) {
                        let med = median(scores);
                        if best.as_ref().map_or(true, |(_, b)| med > *b) {
                            best = Some((label.clone(), med));
                        }
                    }
                }
                if let Some(b) = best {
                    winners.insert(level, b);
                }
            }
            writeln!(w, "level,arch,median_score,std_score,winner").map_err(Error::Io)?;
            for ((level, arch), scores) in &grouped {
                let is_winner = winners
                    .get(level)
                    .map(|(a, _)| a == arch)
                    .unwrap_or(false);
                writeln!(
                    w,
                    "{level},{arch},{},{},{}",
                    median(scores),
                    population_std(scores),
                    if is_winner { 1 } else { 0 }
                )
                .map_err(Error::Io)?;
            }
        }
        ExperimentKind::FederationBaseline => {
            use std::collections::BTreeMap;
            let mut medians: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            let mut stds: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for row in &record.phase_rows {
                medians
                    .entry(row.phase.clone())
                    .or_default()
                    .push(row.median_accuracy);
                stds.entry(row.phase.clone())
                    .or_default()
                    .push(row.std_accuracy);
            }
            writeln!(w, "phase,median_accuracy,agent_std").map_err(Error::Io)?;
            for (phase, meds) in &medians {
                writeln!(w, "{phase},{},{}", median(meds), median(&stds[phase]))
                    .map_err(Error::Io)?;
            }
        }
        ExperimentKind::Shapley => {
            use std::collections::BTreeMap;
            let mut grouped: BTreeMap<(String, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            for row in &record.shapley_rows {
                let entry = grouped
                    .entry((row.learner.clone(), row.agent))
                    .or_default();
                entry.0.push(row.phi);
                if let Some(loo) = row.loo {
                    entry.1.push(loo);
                }
            }
            writeln!(w, "learner,agent,median_phi,std_phi,median_loo").map_err(Error::Io)?;
            for ((learner, agent), (phis, loos)) in &grouped {
                let loo_text = if loos.is_empty() {
                    String::new()
                } else {
                    format!("{}", median(loos))
                };
                writeln!(
                    w,
                    "{learner},{agent},{},{},{loo_text}",
                    median(phis),
                    population_std(phis)
                )
                .map_err(Error::Io)?;
            }
        }
        ExperimentKind::Bounds => {
            writeln!(w, "samples,epsilon,family_size,delta").map_err(Error::Io)?;
            for row in &record.bound_rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    row.samples, row.epsilon, row.family_size, row.delta
                )
                .map_err(Error::Io)?;
            }
        }
    }
    w.flush()?;
    Ok("summary.csv".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn tiny_hffl_config(output_dir: &str) -> ExperimentConfig {
        let text = format!(
            r#"
kind = "hffl"
seed = 11
trials = 2
output_dir = "{output_dir}"

[dataset]
profile = "blobs"
classes = 3
per_class = 30
test_per_class = 20

[levels]
agents = [2, 2]
quotas = [10, 25]

[[model]]
kind = "logistic"

[training]
rounds = 2
"#
        );
        let mut cfg = ExperimentConfig::from_toml(&text).unwrap();
        cfg.resolve();
        cfg
    }

    #[test]
    fn hffl_run_writes_a_self_contained_directory() {
        let root = tempfile::tempdir().unwrap();
        let cfg = tiny_hffl_config("out");
        let record = run_experiment(&cfg, root.path()).unwrap();
        let run_dir = root.path().join("out");
        assert!(run_dir.join("config.toml").is_file());
        assert!(run_dir.join("summary.csv").is_file());
        assert!(run_dir.join("record.json").is_file());
        for trial in 0..2 {
            let td = run_dir.join(format!("trial_{trial}"));
            assert!(td.join("rounds.jsonl").is_file());
            assert!(td.join("f_1.ckpt").is_file());
            assert!(td.join("f_2.ckpt").is_file());
        }
        assert!(!run_dir.join("FAILED").exists());
        // 2 trials x 2 levels of scores.
        assert_eq!(record.score_rows.len(), 4);
        // Aggregates recompute from the raw rows.
        for agg in &record.aggregates {
            let values: Vec<f64> = record
                .score_rows
                .iter()
                .filter(|r| agg.key == format!("level={},arch={}", r.level, r.arch))
                .map(|r| r.score)
                .collect();
            assert_eq!(agg.count, values.len());
            assert_eq!(agg.median, median(&values));
        }
        // Checksums cover the summary and checkpoints.
        assert!(record.checksums.contains_key("summary.csv"));
        assert!(record.checksums.contains_key("trial_0/f_1.ckpt"));
    }

    #[test]
    fn reruns_are_byte_identical_for_summary_artifacts() {
        let root = tempfile::tempdir().unwrap();
        let cfg_a = tiny_hffl_config("a");
        let cfg_b = tiny_hffl_config("b");
        run_experiment(&cfg_a, root.path()).unwrap();
        run_experiment(&cfg_b, root.path()).unwrap();
        let read = |p: &str| std::fs::read(root.path().join(p)).unwrap();
        assert_eq!(read("a/summary.csv"), read("b/summary.csv"));
        assert_eq!(read("a/config.toml").len(), read("b/config.toml").len());
        for trial in 0..2 {
            assert_eq!(
                read(&format!("a/trial_{trial}/f_1.ckpt")),
                read(&format!("b/trial_{trial}/f_1.ckpt"))
            );
        }
    }

    #[test]
    fn invalid_configs_fail_before_writing_results() {
        let root = tempfile::tempdir().unwrap();
        let mut cfg = tiny_hffl_config("bad");
        cfg.trials = 0;
        let err = run_experiment(&cfg, root.path()).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(!root.path().join("bad").join("summary.csv").exists());
    }

    #[test]
    fn failures_leave_a_marker_and_partial_results() {
        let root = tempfile::tempdir().unwrap();
        let mut cfg = tiny_hffl_config("marked");
        // Pass validation with a size hint that the actual build violates:
        // an IDX dataset pointing at a missing file fails at run time.
        cfg.dataset = crate::harness::config::DatasetConfig::Idx {
            images: "/nonexistent/images".into(),
            labels: "/nonexistent/labels".into(),
            test_images: "/nonexistent/ti".into(),
            test_labels: "/nonexistent/tl".into(),
            rate_profile: "digits".into(),
        };
        let err = run_experiment(&cfg, root.path()).unwrap_err();
        assert!(!matches!(err, Error::Config(_)), "{err}");
        assert!(root.path().join("marked").join("FAILED").is_file());
        assert!(root.path().join("marked").join("config.toml").is_file());
    }

    #[test]
    fn bounds_run_emits_the_table() {
        let root = tempfile::tempdir().unwrap();
        let text = r#"
kind = "bounds"
output_dir = "bounds"

[dataset]
profile = "blobs"
classes = 2
per_class = 10

[bounds]
samples = [200, 400]
epsilons = [0.1]
family_size = 10
"#;
        let mut cfg = ExperimentConfig::from_toml(text).unwrap();
        cfg.resolve();
        let record = run_experiment(&cfg, root.path()).unwrap();
        assert_eq!(record.bound_rows.len(), 2);
        let expected = 20.0 * (-4.0f64).exp();
        assert!((record.bound_rows[0].delta - expected).abs() < 1e-12);
        let summary =
            std::fs::read_to_string(root.path().join("bounds").join("summary.csv")).unwrap();
        assert!(summary.starts_with("samples,epsilon,family_size,delta\n"));
        assert_eq!(summary.lines().count(), 3);
    }

    #[test]
    fn shapley_run_produces_per_learner_rows() {
        let root = tempfile::tempdir().unwrap();
        let text = r#"
kind = "shapley"
seed = 3
output_dir = "sh"

[dataset]
profile = "blobs"
classes = 2
per_class = 3
test_per_class = 10
spread = 1.5
radius = 3.0

[shapley]
agents = 6
per_agent = 1
learners = ["1nn", "stump"]
"#;
        let mut cfg = ExperimentConfig::from_toml(text).unwrap();
        cfg.resolve();
        let record = run_experiment(&cfg, root.path()).unwrap();
        // 2 learners x 6 agents.
        assert_eq!(record.shapley_rows.len(), 12);
        assert!(record.shapley_rows.iter().all(|r| r.loo.is_some()));
        let dir = root.path().join("sh").join("trial_0");
        assert!(dir.join("shapley_1nn.csv").is_file());
        assert!(dir.join("shapley_stump.csv").is_file());
        assert!(dir.join("train.csv").is_file());
    }
}
