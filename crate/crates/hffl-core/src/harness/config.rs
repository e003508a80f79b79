//! Experiment configuration: a TOML file with nested sections.
//!
//! Every field has a default; loading a config resolves all defaults into
//! concrete values, and the resolved copy is what gets persisted into the
//! run directory, so a run is reproducible from its directory alone.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{self, Dataset};
use crate::error::{Error, Result};
use crate::federation::FederationConfig;
use crate::hffl::LevelConfig;
use crate::models::{
    self, Activation, AdamConfig, ArchSpec, BatchSpec, DataProfile, Solver, TrainConfig,
};
use crate::rng::derive_seed;
use crate::valuation::LearnerSpec;

const TAG_TRAIN_DATA: u64 = 0x40;
const TAG_TEST_DATA: u64 = 0x41;

/// What the runner executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Single-level federation compared against the local-only baseline.
    FederationBaseline,
    /// The full hierarchy with one architecture.
    Hffl,
    /// The hierarchy swept over a model family with per-level winners.
    HfflPlus,
    /// Per-agent Shapley and leave-one-out valuation.
    Shapley,
    /// Generalization-bound table, optionally validated empirically.
    Bounds,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::FederationBaseline => "federation-baseline",
            ExperimentKind::Hffl => "hffl",
            ExperimentKind::HfflPlus => "hffl-plus",
            ExperimentKind::Shapley => "shapley",
            ExperimentKind::Bounds => "bounds",
        }
    }
}

/// Dataset declaration: synthetic blobs or an IDX file pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum DatasetConfig {
    Blobs {
        classes: usize,
        per_class: usize,
        #[serde(default = "default_test_per_class")]
        test_per_class: usize,
        #[serde(default = "default_spread")]
        spread: f64,
        /// Radius of the default ring of class centers.
        #[serde(default = "default_radius")]
        radius: f64,
        /// Explicit centers override the ring layout.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        centers: Option<Vec<[f64; 2]>>,
    },
    Idx {
        images: String,
        labels: String,
        test_images: String,
        test_labels: String,
        /// Learning-rate profile of the data (digits, census, fashion, text).
        #[serde(default = "default_rate_profile")]
        rate_profile: String,
    },
}

fn default_test_per_class() -> usize {
    200
}
fn default_spread() -> f64 {
    1.0
}
fn default_radius() -> f64 {
    10.0
}
fn default_rate_profile() -> String {
    "digits".to_string()
}

impl DatasetConfig {
    /// Training-set size when it is known without touching the filesystem.
    pub fn size_hint(&self) -> Option<usize> {
        match self {
            DatasetConfig::Blobs {
                classes, per_class, ..
            } => Some(classes * per_class),
            DatasetConfig::Idx { .. } => None,
        }
    }

    pub fn rate_profile(&self) -> DataProfile {
        match self {
            DatasetConfig::Blobs { .. } => DataProfile::Synthetic,
            DatasetConfig::Idx { rate_profile, .. } => match rate_profile.as_str() {
                "census" => DataProfile::Census,
                "fashion" => DataProfile::Fashion,
                "text" => DataProfile::Text,
                _ => DataProfile::Digits,
            },
        }
    }

    /// Materializes the train and test datasets for one trial seed.
    pub fn build(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        match self {
            DatasetConfig::Blobs {
                classes,
                per_class,
                test_per_class,
                spread,
                radius,
                centers,
            } => {
                let centers = centers
                    .clone()
                    .unwrap_or_else(|| datagen::ring_centers(*classes, *radius));
                let train = datagen::generate_blobs(
                    *classes,
                    *per_class,
                    &centers,
                    *spread,
                    derive_seed(seed, &[TAG_TRAIN_DATA]),
                )?;
                let test = datagen::generate_blobs(
                    *classes,
                    *test_per_class,
                    &centers,
                    *spread,
                    derive_seed(seed, &[TAG_TEST_DATA]),
                )?;
                Ok((train, test))
            }
            DatasetConfig::Idx {
                images,
                labels,
                test_images,
                test_labels,
                ..
            } => {
                let train = datagen::load_idx(Path::new(images), Path::new(labels))?;
                let test = datagen::load_idx(Path::new(test_images), Path::new(test_labels))?;
                Ok((train, test))
            }
        }
    }

    fn validate(&self, errors: &mut Vec<String>) {
        match self {
            DatasetConfig::Blobs {
                classes,
                per_class,
                test_per_class,
                spread,
                centers,
                ..
            } => {
                if *classes < 2 {
                    errors.push(format!("dataset: classes must be >= 2, got {classes}"));
                }
                if *per_class == 0 {
                    errors.push("dataset: per_class must be >= 1".into());
                }
                if *test_per_class == 0 {
                    errors.push("dataset: test_per_class must be >= 1".into());
                }
                if !(*spread > 0.0) {
                    errors.push(format!("dataset: spread must be positive, got {spread}"));
                }
                if let Some(c) = centers {
                    if c.len() != *classes {
                        errors.push(format!(
                            "dataset: {} centers for {classes} classes",
                            c.len()
                        ));
                    }
                }
            }
            DatasetConfig::Idx { rate_profile, .. } => {
                if !["digits", "census", "fashion", "text"].contains(&rate_profile.as_str()) {
                    errors.push(format!(
                        "dataset: unknown rate_profile `{rate_profile}`"
                    ));
                }
            }
        }
    }
}

/// One model family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// `logistic` or `mlp`.
    pub kind: String,
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: String,
}

fn default_activation() -> String {
    "relu".to_string()
}

impl ModelConfig {
    pub fn to_arch(&self, input_dim: usize, classes: usize) -> Result<ArchSpec> {
        let activation = match self.activation.as_str() {
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            other => {
                return Err(Error::Config(format!(
                    "model: unknown activation `{other}` (expected relu or tanh)"
                )))
            }
        };
        match self.kind.as_str() {
            "logistic" => ArchSpec::logistic(input_dim, classes),
            "mlp" => ArchSpec::mlp(input_dim, &self.hidden, classes, activation),
            other => Err(Error::Config(format!(
                "model: unknown kind `{other}` (expected logistic or mlp)"
            ))),
        }
    }

    fn validate(&self, idx: usize, errors: &mut Vec<String>) {
        match self.kind.as_str() {
            "logistic" => {
                if !self.hidden.is_empty() {
                    errors.push(format!("model[{idx}]: logistic takes no hidden layers"));
                }
            }
            "mlp" => {
                if self.hidden.is_empty() {
                    errors.push(format!("model[{idx}]: mlp needs at least one hidden layer"));
                }
                if self.hidden.iter().any(|&h| h == 0) {
                    errors.push(format!("model[{idx}]: hidden layer sizes must be positive"));
                }
            }
            other => errors.push(format!("model[{idx}]: unknown kind `{other}`")),
        }
        if !["relu", "tanh"].contains(&self.activation.as_str()) {
            errors.push(format!(
                "model[{idx}]: unknown activation `{}`",
                self.activation
            ));
        }
    }
}

/// The contribution hierarchy as plain arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelsConfig {
    pub agents: Vec<usize>,
    pub quotas: Vec<usize>,
}

impl LevelsConfig {
    pub fn to_levels(&self) -> Result<LevelConfig> {
        if self.agents.len() != self.quotas.len() {
            return Err(Error::Config(format!(
                "levels: {} agent counts but {} quotas",
                self.agents.len(),
                self.quotas.len()
            )));
        }
        LevelConfig::from_pairs(
            &self
                .agents
                .iter()
                .zip(&self.quotas)
                .map(|(&a, &q)| (a, q))
                .collect::<Vec<_>>(),
        )
    }
}

/// Optimizer and round settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Communication rounds T.
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Local epochs per agent per round.
    #[serde(default = "default_local_epochs")]
    pub local_epochs: usize,
    /// Mini-batch size; 0 means one full-batch step per epoch.
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// `adam` or `sgd`.
    #[serde(default = "default_solver")]
    pub solver: String,
    /// Defaults from the dataset's rate profile when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    /// Local epochs for the round-0 baseline (federation-baseline runs).
    #[serde(default = "default_local_epochs")]
    pub baseline_epochs: usize,
    /// Score each agent's local model every round.
    #[serde(default = "default_track")]
    pub track_agent_accuracy: bool,
}

fn default_rounds() -> usize {
    10
}
fn default_local_epochs() -> usize {
    1
}
fn default_batch_size() -> usize {
    32
}
fn default_solver() -> String {
    "adam".to_string()
}
fn default_track() -> bool {
    true
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            rounds: default_rounds(),
            local_epochs: default_local_epochs(),
            batch_size: default_batch_size(),
            solver: default_solver(),
            learning_rate: None,
            baseline_epochs: default_local_epochs(),
            track_agent_accuracy: default_track(),
        }
    }
}

impl TrainingConfig {
    fn batch(&self) -> BatchSpec {
        if self.batch_size == 0 {
            BatchSpec::Full
        } else {
            BatchSpec::Size(self.batch_size)
        }
    }

    /// The per-agent local training recipe, with `epochs` as given.
    pub fn local_config(&self, epochs: usize) -> Result<TrainConfig> {
        let lr = self
            .learning_rate
            .ok_or_else(|| Error::Config("training: learning_rate unresolved".into()))?;
        let solver = match self.solver.as_str() {
            "adam" => Solver::Adam(AdamConfig::with_learning_rate(lr)),
            "sgd" => Solver::Sgd { learning_rate: lr },
            other => {
                return Err(Error::Config(format!(
                    "training: unknown solver `{other}` (expected adam or sgd)"
                )))
            }
        };
        Ok(TrainConfig {
            solver,
            epochs,
            batch: self.batch(),
        })
    }

    pub fn federation_config(&self) -> Result<FederationConfig> {
        Ok(FederationConfig {
            local: self.local_config(self.local_epochs)?,
            track_agent_accuracy: self.track_agent_accuracy,
        })
    }

    fn validate(&self, errors: &mut Vec<String>) {
        if self.rounds == 0 {
            errors.push("training: rounds must be >= 1".into());
        }
        if !["adam", "sgd"].contains(&self.solver.as_str()) {
            errors.push(format!("training: unknown solver `{}`", self.solver));
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0) || !lr.is_finite() {
                errors.push(format!("training: learning_rate must be positive, got {lr}"));
            }
        }
    }
}

/// Valuation-demo settings (shapley runs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyConfig {
    #[serde(default = "default_shapley_agents")]
    pub agents: usize,
    /// Examples per agent (the demo supports one or more).
    #[serde(default = "default_per_agent")]
    pub per_agent: usize,
    #[serde(default = "default_learners")]
    pub learners: Vec<String>,
    #[serde(default = "default_include_loo")]
    pub include_loo: bool,
}

fn default_shapley_agents() -> usize {
    10
}
fn default_per_agent() -> usize {
    1
}
fn default_learners() -> Vec<String> {
    vec![
        "1nn".to_string(),
        "stump".to_string(),
        "logistic".to_string(),
        "svm".to_string(),
    ]
}
fn default_include_loo() -> bool {
    true
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        Self {
            agents: default_shapley_agents(),
            per_agent: default_per_agent(),
            learners: default_learners(),
            include_loo: default_include_loo(),
        }
    }
}

impl ShapleyConfig {
    pub fn parsed_learners(&self) -> Result<Vec<LearnerSpec>> {
        self.learners.iter().map(|l| LearnerSpec::parse(l)).collect()
    }
}

/// Bound-table settings (bounds runs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub samples: Vec<usize>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_family_size")]
    pub family_size: usize,
    #[serde(default = "default_loss_range")]
    pub loss_range: [f64; 2],
    /// Also run the empirical gap check against the configured dataset and
    /// model family.
    #[serde(default)]
    pub empirical: bool,
    #[serde(default = "default_empirical_trials")]
    pub empirical_trials: usize,
    #[serde(default = "default_empirical_train_size")]
    pub empirical_train_size: usize,
    #[serde(default = "default_empirical_epsilon")]
    pub empirical_epsilon: f64,
    /// `zero-one` or `cross-entropy`.
    #[serde(default = "default_metric")]
    pub metric: String,
}

fn default_family_size() -> usize {
    10
}
fn default_loss_range() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_empirical_trials() -> usize {
    100
}
fn default_empirical_train_size() -> usize {
    200
}
fn default_empirical_epsilon() -> f64 {
    0.15
}
fn default_metric() -> String {
    "zero-one".to_string()
}

/// The complete experiment declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub dataset: DatasetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<LevelsConfig>,
    #[serde(default, rename = "model", skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapley: Option<ShapleyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
}

fn default_trials() -> usize {
    1
}
fn default_output_dir() -> String {
    "run".to_string()
}

impl ExperimentConfig {
    /// Parses a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    /// Reads and resolves a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve();
        Ok(cfg)
    }

    /// Fills every remaining default so the persisted copy is complete.
    pub fn resolve(&mut self) {
        if self.training.learning_rate.is_none() {
            self.training.learning_rate =
                Some(models::default_learning_rate(self.dataset.rate_profile()));
        }
        if self.kind == ExperimentKind::Shapley && self.shapley.is_none() {
            self.shapley = Some(ShapleyConfig::default());
        }
    }

    /// Serializes the resolved config back to TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Record(e.to_string()))
    }

    /// Collects every validation problem; empty means the config is runnable.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.trials == 0 {
            errors.push("trials must be >= 1".into());
        }
        if self.output_dir.is_empty() {
            errors.push("output_dir must not be empty".into());
        }
        self.dataset.validate(&mut errors);
        self.training.validate(&mut errors);
        for (i, m) in self.models.iter().enumerate() {
            m.validate(i, &mut errors);
        }

        let needs_levels = matches!(
            self.kind,
            ExperimentKind::FederationBaseline | ExperimentKind::Hffl | ExperimentKind::HfflPlus
        );
        if needs_levels {
            match &self.levels {
                None => errors.push(format!(
                    "{} experiments need a [levels] section",
                    self.kind.as_str()
                )),
                Some(lv) => match lv.to_levels() {
                    Err(e) => errors.push(e.to_string()),
                    Ok(levels) => {
                        if self.kind == ExperimentKind::FederationBaseline
                            && levels.level_count() != 1
                        {
                            errors.push(
                                "federation-baseline runs use a single level".into(),
                            );
                        }
                        if let Some(available) = self.dataset.size_hint() {
                            let required = levels.total_required();
                            if required > available {
                                errors.push(format!(
                                    "hierarchy requires {required} examples but the dataset \
                                     provides {available}"
                                ));
                            }
                        }
                    }
                },
            }
            if self.models.is_empty() {
                errors.push("at least one [[model]] section is required".into());
            }
            if self.kind == ExperimentKind::Hffl && self.models.len() > 1 {
                errors.push(format!(
                    "hffl uses one architecture across all levels, got {} \
                     (use hffl-plus for a family)",
                    self.models.len()
                ));
            }
        }

        if self.kind == ExperimentKind::Shapley {
            let sh = self.shapley.clone().unwrap_or_default();
            if !(2..=20).contains(&sh.agents) {
                errors.push(format!(
                    "shapley: agents must be between 2 and 20, got {}",
                    sh.agents
                ));
            }
            if sh.per_agent == 0 {
                errors.push("shapley: per_agent must be >= 1".into());
            }
            if sh.learners.is_empty() {
                errors.push("shapley: at least one learner required".into());
            }
            for l in &sh.learners {
                if let Err(e) = LearnerSpec::parse(l) {
                    errors.push(e.to_string());
                }
            }
            match &self.dataset {
                DatasetConfig::Blobs {
                    classes, per_class, ..
                } => {
                    if *classes != 2 {
                        errors.push(format!(
                            "shapley: the valuation demo is binary, got {classes} classes"
                        ));
                    }
                    if classes * per_class != sh.agents * sh.per_agent {
                        errors.push(format!(
                            "shapley: dataset has {} examples but {} agents x {} per agent = {}",
                            classes * per_class,
                            sh.agents,
                            sh.per_agent,
                            sh.agents * sh.per_agent
                        ));
                    }
                }
                DatasetConfig::Idx { .. } => {
                    errors.push("shapley: the valuation demo runs on blob datasets".into())
                }
            }
        }

        if self.kind == ExperimentKind::Bounds {
            match &self.bounds {
                None => errors.push("bounds experiments need a [bounds] section".into()),
                Some(b) => {
                    if b.samples.is_empty() {
                        errors.push("bounds: samples list must not be empty".into());
                    }
                    if b.epsilons.is_empty() {
                        errors.push("bounds: epsilons list must not be empty".into());
                    }
                    if b.epsilons.iter().any(|&e| !(e > 0.0)) {
                        errors.push("bounds: epsilons must be positive".into());
                    }
                    if b.family_size == 0 {
                        errors.push("bounds: family_size must be >= 1".into());
                    }
                    if b.loss_range[1] <= b.loss_range[0] {
                        errors.push(format!(
                            "bounds: loss_range must satisfy b > a, got ({}, {})",
                            b.loss_range[0], b.loss_range[1]
                        ));
                    }
                    if !["zero-one", "cross-entropy"].contains(&b.metric.as_str()) {
                        errors.push(format!("bounds: unknown metric `{}`", b.metric));
                    }
                    if b.empirical {
                        if self.models.is_empty() {
                            errors.push(
                                "bounds: empirical validation needs [[model]] sections".into(),
                            );
                        }
                        if b.empirical_trials == 0 {
                            errors.push("bounds: empirical_trials must be >= 1".into());
                        }
                        if b.empirical_train_size == 0 {
                            errors.push("bounds: empirical_train_size must be >= 1".into());
                        }
                        if let Some(available) = self.dataset.size_hint() {
                            if b.empirical_train_size > available {
                                errors.push(format!(
                                    "bounds: empirical_train_size {} exceeds the dataset's {}",
                                    b.empirical_train_size, available
                                ));
                            }
                        }
                    }
                }
            }
        }
        errors
    }

    /// Validates, collapsing all problems into one configuration error.
    pub fn validate(&self) -> Result<()> {
        let errors = self.validation_errors();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "hffl"
seed = 7

[dataset]
profile = "blobs"
classes = 3
per_class = 40

[levels]
agents = [2, 2]
quotas = [10, 20]

[[model]]
kind = "logistic"
"#;

    #[test]
    fn minimal_config_parses_and_resolves_defaults() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.resolve();
        assert_eq!(cfg.kind, ExperimentKind::Hffl);
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.training.rounds, 10);
        assert_eq!(cfg.training.batch_size, 32);
        assert_eq!(cfg.training.learning_rate, Some(0.01));
        assert!(cfg.validation_errors().is_empty());
    }

    #[test]
    fn resolved_config_serializes_every_default() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.resolve();
        let text = cfg.to_toml().unwrap();
        for needle in [
            "trials = 1",
            "rounds = 10",
            "local_epochs = 1",
            "batch_size = 32",
            "solver = \"adam\"",
            "learning_rate = 0.01",
            "test_per_class = 200",
            "spread = 1.0",
        ] {
            assert!(text.contains(needle), "resolved copy missing `{needle}`:\n{text}");
        }
        // And it round-trips.
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_lists_every_problem_at_once() {
        let text = r#"
kind = "hffl-plus"
trials = 0

[dataset]
profile = "blobs"
classes = 1
per_class = 10

[levels]
agents = [2, 2]
quotas = [20, 10]
"#;
        let mut cfg = ExperimentConfig::from_toml(text).unwrap();
        cfg.resolve();
        let errors = cfg.validation_errors();
        assert!(errors.iter().any(|e| e.contains("trials")), "{errors:?}");
        assert!(errors.iter().any(|e| e.contains("classes")), "{errors:?}");
        assert!(errors.iter().any(|e| e.contains("quotas")), "{errors:?}");
        assert!(errors.iter().any(|e| e.contains("model")), "{errors:?}");
        assert!(errors.len() >= 4);
    }

    #[test]
    fn capacity_violations_name_both_counts() {
        let text = r#"
kind = "hffl"

[dataset]
profile = "blobs"
classes = 2
per_class = 10

[levels]
agents = [3]
quotas = [10]

[[model]]
kind = "logistic"
"#;
        let mut cfg = ExperimentConfig::from_toml(text).unwrap();
        cfg.resolve();
        let errors = cfg.validation_errors();
        assert_eq!(errors.len(), 1);
        assert!(errors[0].contains("30"), "{}", errors[0]);
        assert!(errors[0].contains("20"), "{}", errors[0]);
    }

    #[test]
    fn hffl_rejects_multiple_models() {
        let text = format!("{MINIMAL}\n[[model]]\nkind = \"mlp\"\nhidden = [4]\n");
        let mut cfg = ExperimentConfig::from_toml(&text).unwrap();
        cfg.resolve();
        let errors = cfg.validation_errors();
        assert!(errors.iter().any(|e| e.contains("hffl-plus")), "{errors:?}");
    }

    #[test]
    fn shapley_config_checks_ownership_arithmetic() {
        let text = r#"
kind = "shapley"

[dataset]
profile = "blobs"
classes = 2
per_class = 5

[shapley]
agents = 4
per_agent = 2
"#;
        let mut cfg = ExperimentConfig::from_toml(text).unwrap();
        cfg.resolve();
        let errors = cfg.validation_errors();
        assert!(errors.iter().any(|e| e.contains("10") && e.contains("8")), "{errors:?}");
    }

    #[test]
    fn blob_dataset_builds_train_and_test() {
        let cfg = DatasetConfig::Blobs {
            classes: 3,
            per_class: 12,
            test_per_class: 5,
            spread: 1.0,
            radius: 8.0,
            centers: None,
        };
        let (train, test) = cfg.build(9).unwrap();
        assert_eq!(train.len(), 36);
        assert_eq!(test.len(), 15);
        assert_ne!(train, test);
        let (again, _) = cfg.build(9).unwrap();
        assert_eq!(train, again);
    }

    #[test]
    fn unknown_kind_is_a_parse_error() {
        let text = MINIMAL.replace("\"hffl\"", "\"mystery\"");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(Error::Config(_))
        ));
    }
}
