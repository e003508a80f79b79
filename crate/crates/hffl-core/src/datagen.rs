//! Dataset generation, IDX loading, and seeded partitioning.
//!
//! Datasets are immutable once constructed: features are stored row-major
//! with integer class labels in `[0, K)`. Partitions assign disjoint index
//! ranges to agents ("sampling without replacement"), and level subsamples
//! give each agent one nested family of index prefixes
//! `S^1 ⊆ S^2 ⊆ … ⊆ full assignment`, frozen for a whole run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::federation::AgentId;
use crate::hffl::LevelConfig;
use crate::rng::{derive_seed, rng_from};

const TAG_BLOBS: u64 = 0x01;
const TAG_PARTITION: u64 = 0x02;
const TAG_SUBSAMPLE: u64 = 0x03;

/// A labeled dataset with row-major features and class labels in `[0, K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<u32>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<u32>,
        n_classes: usize,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Config("dataset needs at least one feature".into()));
        }
        if n_classes < 2 {
            return Err(Error::Config(format!(
                "dataset needs at least 2 classes, got {n_classes}"
            )));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::Config(format!(
                "feature matrix has {} values, expected {} rows x {} columns",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite feature value {bad}")));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= n_classes) {
            return Err(Error::Config(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(Self {
            name: name.into(),
            features,
            n_features,
            labels,
            n_classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of examples.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Number of classes K.
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.features[idx * self.n_features..(idx + 1) * self.n_features]
    }

    pub fn label(&self, idx: usize) -> u32 {
        self.labels[idx]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Fraction of examples carrying `class`.
    pub fn class_frequency(&self, class: u32) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&l| l == class).count() as f64 / self.len() as f64
    }

    /// Restricts the dataset to the given rows (used by valuation demos and
    /// fixtures; training code indexes rows directly instead).
    pub fn select(&self, indices: &[usize], name: impl Into<String>) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Config(format!(
                    "index {i} out of range for dataset of {}",
                    self.len()
                )));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.label(i));
        }
        Dataset::new(name, features, self.n_features, labels, self.n_classes)
    }

    /// Writes the dataset as CSV: header `x0,..,x{d-1},label`, one example
    /// per row, label in the last column. Floats use the shortest
    /// round-trippable representation, so export is byte-deterministic.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut line = String::new();
        for d in 0..self.n_features {
            if d > 0 {
                line.push(',');
            }
            let _ = write!(line, "x{d}");
        }
        line.push_str(",label\n");
        w.write_all(line.as_bytes())?;
        for i in 0..self.len() {
            line.clear();
            for (d, v) in self.row(i).iter().enumerate() {
                if d > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{v}");
            }
            let _ = writeln!(line, ",{}", self.label(i));
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Reads a dataset written by [`Dataset::write_csv`].
    pub fn read_csv<R: BufRead>(r: R, name: impl Into<String>, n_classes: usize) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty csv".into()))??;
        let n_features = header.split(',').count().saturating_sub(1);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n_features + 1 {
                return Err(Error::Config(format!(
                    "csv row {}: expected {} fields, found {}",
                    lineno + 2,
                    n_features + 1,
                    fields.len()
                )));
            }
            for f in &fields[..n_features] {
                features.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("csv row {}: {e}", lineno + 2)))?,
                );
            }
            labels.push(
                fields[n_features]
                    .trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Config(format!("csv row {}: {e}", lineno + 2)))?,
            );
        }
        Dataset::new(name, features, n_features, labels, n_classes)
    }
}

/// Evenly spaced 2-D class centers on a circle of the given radius. Used as
/// the default layout for synthetic blob datasets.
pub fn ring_centers(classes: usize, radius: f64) -> Vec<[f64; 2]> {
    (0..classes)
        .map(|c| {
            let angle = 2.0 * std::f64::consts::PI * c as f64 / classes as f64;
            [radius * angle.cos(), radius * angle.sin()]
        })
        .collect()
}

/// Generates a 2-D Gaussian blob dataset: `per_class` points per class,
/// isotropic noise of standard deviation `spread` around each center.
/// Same seed, same dataset, bit for bit.
pub fn generate_blobs(
    classes: usize,
    per_class: usize,
    centers: &[[f64; 2]],
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if classes < 2 {
        return Err(Error::Config(format!(
            "blob generator needs at least 2 classes, got {classes}"
        )));
    }
    if per_class == 0 {
        return Err(Error::Config("per_class must be at least 1".into()));
    }
    if centers.len() != classes {
        return Err(Error::Config(format!(
            "expected one center per class: {classes} classes, {} centers",
            centers.len()
        )));
    }
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(Error::Config(format!("spread must be positive, got {spread}")));
    }
    let mut rng = rng_from(derive_seed(seed, &[TAG_BLOBS]));
    let normal = StandardNormal;
    let total = classes * per_class;
    let mut features = Vec::with_capacity(total * 2);
    let mut labels = Vec::with_capacity(total);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let dx: f64 = normal.sample(&mut rng);
            let dy: f64 = normal.sample(&mut rng);
            features.push(center[0] + spread * dx);
            features.push(center[1] + spread * dy);
            labels.push(c as u32);
        }
    }
    Dataset::new(
        format!("blobs-{classes}x{per_class}"),
        features,
        2,
        labels,
        classes,
    )
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

struct IdxReader<'a> {
    path: &'a Path,
    bytes: Vec<u8>,
    pos: usize,
}

impl<'a> IdxReader<'a> {
    fn open(path: &'a Path) -> Result<Self> {
        Ok(Self {
            path,
            bytes: std::fs::read(path)?,
            pos: 0,
        })
    }

    fn fail(&self, field: &'static str, detail: String) -> Error {
        Error::Format {
            path: self.path.display().to_string(),
            field,
            detail,
        }
    }

    fn read_u32(&mut self, field: &'static str) -> Result<u32> {
        if self.pos + 4 > self.bytes.len() {
            return Err(self.fail(
                field,
                format!("file truncated at byte {} while reading {field}", self.pos),
            ));
        }
        let v = u32::from_be_bytes(self.bytes[self.pos..self.pos + 4].try_into().unwrap());
        self.pos += 4;
        Ok(v)
    }

    fn read_payload(&mut self, n: usize, field: &'static str) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.fail(
                field,
                format!(
                    "file truncated: expected {} payload bytes, found {}",
                    n,
                    self.bytes.len() - self.pos
                ),
            ));
        }
        if self.pos + n < self.bytes.len() {
            return Err(self.fail(
                field,
                format!("{} trailing bytes after payload", self.bytes.len() - self.pos - n),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

/// Loads an IDX image/label file pair (the distribution format of the
/// classic handwritten-digit datasets). Pixels are scaled to `[0, 1]`;
/// labels must be digits 0-9.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let mut images = IdxReader::open(images_path)?;
    let magic = images.read_u32("magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(images.fail(
            "magic",
            format!("expected {IDX_IMAGES_MAGIC:#010x} (images), found {magic:#010x}"),
        ));
    }
    let count = images.read_u32("count")? as usize;
    let rows = images.read_u32("rows")? as usize;
    let cols = images.read_u32("cols")? as usize;
    if rows == 0 || cols == 0 {
        return Err(images.fail("rows", format!("degenerate image shape {rows}x{cols}")));
    }
    let pixels = images.read_payload(count * rows * cols, "image data")?;

    let mut labels_file = IdxReader::open(labels_path)?;
    let magic = labels_file.read_u32("magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(labels_file.fail(
            "magic",
            format!("expected {IDX_LABELS_MAGIC:#010x} (labels), found {magic:#010x}"),
        ));
    }
    let label_count = labels_file.read_u32("count")? as usize;
    if label_count != count {
        return Err(labels_file.fail(
            "count",
            format!("images file has {count} items but labels file has {label_count}"),
        ));
    }
    let raw_labels = labels_file.read_payload(count, "label data")?.to_vec();
    if let Some(bad) = raw_labels.iter().find(|&&l| l > 9) {
        return Err(labels_file.fail("label data", format!("label value {bad} outside 0-9")));
    }

    let features = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let labels = raw_labels.iter().map(|&l| l as u32).collect();
    let name = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".to_string());
    Dataset::new(name, features, rows * cols, labels, 10)
}

/// A seeded, disjoint assignment of dataset indices to agents.
#[derive(Debug, Clone)]
pub struct Partition {
    assignments: BTreeMap<AgentId, Vec<usize>>,
    seed: u64,
    source: String,
}

impl Partition {
    pub fn assignment(&self, id: AgentId) -> Option<&[usize]> {
        self.assignments.get(&id).map(|v| v.as_slice())
    }

    /// Agents in canonical `(level, agent)` order.
    pub fn agents(&self) -> impl Iterator<Item = (AgentId, &[usize])> {
        self.assignments.iter().map(|(id, v)| (*id, v.as_slice()))
    }

    pub fn total_assigned(&self) -> usize {
        self.assignments.values().map(|v| v.len()).sum()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Checks that this partition was built for the given hierarchy: every
    /// expected agent present with exactly its level's quota.
    pub fn matches(&self, levels: &LevelConfig) -> Result<()> {
        let expected: usize = levels.levels().iter().map(|s| s.agents).sum();
        if self.assignments.len() != expected {
            return Err(Error::Config(format!(
                "partition has {} agents, hierarchy expects {expected}",
                self.assignments.len()
            )));
        }
        for id in levels.agent_ids() {
            let quota = levels.quota(id.level);
            match self.assignment(id) {
                Some(idx) if idx.len() == quota => {}
                Some(idx) => {
                    return Err(Error::Config(format!(
                        "agent ({}, {}) holds {} indices, quota is {quota}",
                        id.level,
                        id.agent,
                        idx.len()
                    )))
                }
                None => {
                    return Err(Error::Config(format!(
                        "partition is missing agent ({}, {})",
                        id.level, id.agent
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Assigns `m_l` dataset indices to every agent at level `l`, without
/// replacement across the whole federation.
pub fn partition(data: &Dataset, levels: &LevelConfig, seed: u64) -> Result<Partition> {
    let required = levels.total_required();
    if required > data.len() {
        return Err(Error::Capacity {
            required,
            available: data.len(),
        });
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng_from(derive_seed(seed, &[TAG_PARTITION])));

    let mut assignments = BTreeMap::new();
    let mut cursor = 0;
    for (level, spec) in levels.enumerate() {
        for agent in 0..spec.agents {
            let mut chunk = order[cursor..cursor + spec.quota].to_vec();
            cursor += spec.quota;
            chunk.sort_unstable();
            assignments.insert(AgentId { level, agent }, chunk);
        }
    }
    Ok(Partition {
        assignments,
        seed,
        source: data.name().to_string(),
    })
}

/// Per-agent nested index prefixes: agent `(i, j)`'s data for a session at
/// level `l ≤ i` is the first `m_l` entries of one fixed shuffle of its
/// assignment, so `S^1 ⊆ S^2 ⊆ … ⊆` the full assignment by construction.
/// Drawn once per run and frozen across communication rounds.
#[derive(Debug, Clone)]
pub struct LevelSubsample {
    ordered: BTreeMap<AgentId, Vec<usize>>,
    quotas: Vec<usize>,
}

impl LevelSubsample {
    /// The indices agent `id` exposes in a level-`level` session.
    pub fn for_level(&self, id: AgentId, level: usize) -> Result<&[usize]> {
        if level == 0 || level > id.level {
            return Err(Error::Config(format!(
                "agent at level {} cannot serve a level-{level} session",
                id.level
            )));
        }
        let ordered = self.ordered.get(&id).ok_or_else(|| {
            Error::Config(format!("unknown agent ({}, {})", id.level, id.agent))
        })?;
        Ok(&ordered[..self.quotas[level - 1]])
    }

    /// The agent's full assignment in subsample order.
    pub fn full(&self, id: AgentId) -> Option<&[usize]> {
        self.ordered.get(&id).map(|v| v.as_slice())
    }
}

/// Draws the frozen per-agent subsample orders for a run.
pub fn level_subsample(
    part: &Partition,
    levels: &LevelConfig,
    seed: u64,
) -> Result<LevelSubsample> {
    part.matches(levels)?;
    let mut ordered = BTreeMap::new();
    for (id, assignment) in part.agents() {
        let mut order = assignment.to_vec();
        order.shuffle(&mut rng_from(derive_seed(
            seed,
            &[TAG_SUBSAMPLE, id.level as u64, id.agent as u64],
        )));
        ordered.insert(id, order);
    }
    Ok(LevelSubsample {
        ordered,
        quotas: levels.levels().iter().map(|s| s.quota).collect(),
    })
}
