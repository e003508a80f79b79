//! Cross-run summaries.
//!
//! Within a run, aggregates are medians and population standard deviations
//! over trials. Across runs, `summarize` reduces each record to its
//! per-key median first, then reports the median and spread of those
//! medians, so two identical records summarize with zero cross-run spread.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};

use super::record::RunRecord;

/// Median of a sample (mean of the two middle order statistics when even).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Population standard deviation (zero for a single observation).
pub fn population_std(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "std of an empty sample");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

/// A generic keyed summary: named key columns plus median/std/count.
#[derive(Debug, Clone)]
pub struct SummaryTable {
    pub key_columns: Vec<&'static str>,
    /// `(key values, median, cross-run std, records)` per group.
    pub rows: Vec<(Vec<String>, f64, f64, usize)>,
    /// Name of the summarized statistic, e.g. `score` or `phi`.
    pub statistic: &'static str,
}

impl SummaryTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{},median_{},cross_run_std,records",
            self.key_columns.join(","),
            self.statistic
        )?;
        for (key, med, std, n) in &self.rows {
            writeln!(w, "{},{med},{std},{n}", key.join(","))?;
        }
        Ok(())
    }
}

type Grouped = BTreeMap<Vec<String>, Vec<f64>>;

fn group_record(record: &RunRecord) -> (Vec<&'static str>, &'static str, Grouped) {
    let mut grouped: Grouped = BTreeMap::new();
    if !record.score_rows.is_empty() {
        for row in &record.score_rows {
            grouped
                .entry(vec![row.level.to_string(), row.arch.clone()])
                .or_default()
                .push(row.score);
        }
        (vec!["level", "arch"], "score", grouped)
    } else if !record.shapley_rows.is_empty() {
        for row in &record.shapley_rows {
            grouped
                .entry(vec![row.learner.clone(), row.agent.to_string()])
                .or_default()
                .push(row.phi);
        }
        (vec!["learner", "agent"], "phi", grouped)
    } else if !record.phase_rows.is_empty() {
        for row in &record.phase_rows {
            grouped
                .entry(vec![row.phase.clone()])
                .or_default()
                .push(row.median_accuracy);
        }
        (vec!["phase"], "accuracy", grouped)
    } else {
        for row in &record.bound_rows {
            grouped
                .entry(vec![
                    row.samples.to_string(),
                    row.epsilon.to_string(),
                    row.family_size.to_string(),
                ])
                .or_default()
                .push(row.delta);
        }
        (vec!["samples", "epsilon", "family_size"], "delta", grouped)
    }
}

/// Cross-run comparison: all records must share the experiment kind. Each
/// record contributes its own per-key median; rows are keyed
/// deterministically.
pub fn summarize(records: &[RunRecord]) -> Result<SummaryTable> {
    if records.is_empty() {
        return Err(Error::Usage("no run records to summarize".into()));
    }
    let kind = records[0].kind;
    if let Some(bad) = records.iter().find(|r| r.kind != kind) {
        return Err(Error::Usage(format!(
            "mixed experiment kinds: {} vs {}",
            kind.as_str(),
            bad.kind.as_str()
        )));
    }

    let mut key_columns = Vec::new();
    let mut statistic = "value";
    let mut per_record: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for record in records {
        let (cols, stat, grouped) = group_record(record);
        key_columns = cols;
        statistic = stat;
        for (key, values) in grouped {
            per_record.entry(key).or_default().push(median(&values));
        }
    }
    let rows = per_record
        .into_iter()
        .map(|(key, medians)| {
            (
                key,
                median(&medians),
                population_std(&medians),
                medians.len(),
            )
        })
        .collect();
    Ok(SummaryTable {
        key_columns,
        rows,
        statistic,
    })
}
