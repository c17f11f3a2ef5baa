//! Experiment configuration in TOML.
//!
//! ```toml
//! strategy = "aeig"            # or: strategies = ["random", "aeig"]
//! seed_fraction = 0.1
//! batch_size = 300
//! rounds = 6                   # evaluation points, including the seed round
//! repetitions = 5
//! base_seed = 0
//! mc_samples = 20
//! # ig_step_size = 0.05        # defaults to train.learning_rate
//!
//! [dataset]
//! preset = "dr-like"           # or: path = "data.csv", or a [dataset.synthetic] table
//! seed = 0
//!
//! [model]
//! hidden_units = 64
//! dropout_rate = 0.2
//!
//! [train]
//! learning_rate = 0.05
//!
//! [output]
//! dir = "results/aeig"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{Architecture, TrainConfig};
use crate::data::{initial_labeled_count, Dataset, Split};
use crate::error::{Error, Result};
use crate::io::{generate_synthetic, load_dataset, SyntheticSpec};
use crate::strategy::{StrategyKind, DEFAULT_MC_SAMPLES};

/// Where the data comes from: exactly one of `preset`, `path`, `synthetic`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Generator seed for `preset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Class count for `path`; inferred from the labels when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

impl DatasetConfig {
    pub fn preset(name: &str, seed: u64) -> Self {
        Self {
            preset: Some(name.to_owned()),
            seed: Some(seed),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let sources = [self.preset.is_some(), self.path.is_some(), self.synthetic.is_some()];
        let mut errors = Vec::new();
        if sources.iter().filter(|&&s| s).count() != 1 {
            errors.push("dataset: set exactly one of `preset`, `path`, `synthetic`".into());
        }
        if let Some(name) = &self.preset {
            if let Err(Error::Config(e)) = SyntheticSpec::preset(name, 0) {
                errors.extend(e);
            }
        }
        if let Some(spec) = &self.synthetic {
            errors.extend(spec.validate().into_iter().map(|e| format!("dataset.synthetic.{e}")));
        }
        if self.num_classes.is_some() && self.path.is_none() {
            errors.push("dataset.num_classes only applies with dataset.path".into());
        }
        errors
    }

    /// The generator spec behind `preset` or `synthetic`, if any.
    pub fn synthetic_spec(&self) -> Result<Option<SyntheticSpec>> {
        if let Some(name) = &self.preset {
            return SyntheticSpec::preset(name, self.seed.unwrap_or(0)).map(Some);
        }
        Ok(self.synthetic.clone())
    }

    pub fn load(&self) -> Result<Dataset> {
        let errors = self.validate();
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        match (&self.path, self.synthetic_spec()?) {
            (Some(path), _) => load_dataset(path, self.num_classes),
            (None, Some(spec)) => generate_synthetic(&spec),
            (None, None) => unreachable!("validated above"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Write per-round candidate scores under `scores/`.
    #[serde(default)]
    pub dump_scores: bool,
    /// Write each repetition's final classifier head under `models/`.
    #[serde(default)]
    pub save_models: bool,
}

fn default_seed_fraction() -> f64 {
    0.1
}

fn default_rounds() -> usize {
    6
}

fn default_repetitions() -> usize {
    5
}

fn default_mc_samples() -> usize {
    DEFAULT_MC_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default = "default_seed_fraction")]
    pub seed_fraction: f64,
    /// Samples acquired per round (B).
    pub batch_size: usize,
    /// Evaluation points per repetition (J), the seed round included; J − 1
    /// acquisitions are made.
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ig_step_size: Option<f64>,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: Architecture,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Defaults for everything but the data, strategy and batch size.
    pub fn new(dataset: DatasetConfig, strategy: StrategyKind, batch_size: usize) -> Self {
        Self {
            strategy: Some(strategy),
            strategies: Vec::new(),
            seed_fraction: default_seed_fraction(),
            batch_size,
            rounds: default_rounds(),
            repetitions: default_repetitions(),
            base_seed: 0,
            mc_samples: DEFAULT_MC_SAMPLES,
            ig_step_size: None,
            dataset,
            model: Architecture::default(),
            train: TrainConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.message().trim().to_owned() + &span_hint(text, e.span())]))
    }

    /// Parses a config file. A relative `dataset.path` is taken relative to
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msgs) => Error::Config(msgs.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
            other => other,
        })?;
        if let Some(p) = config.dataset.path.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// `strategy` followed by `strategies`, duplicates removed.
    pub fn strategy_list(&self) -> Vec<StrategyKind> {
        let mut out: Vec<StrategyKind> = Vec::new();
        for k in self.strategy.iter().chain(&self.strategies) {
            if !out.contains(k) {
                out.push(*k);
            }
        }
        out
    }

    /// Gradient step size of the information-gain scores.
    pub fn step_size(&self) -> f64 {
        self.ig_step_size.unwrap_or(self.train.learning_rate)
    }

    /// All field-level problems, each naming its field.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.strategy_list().is_empty() {
            errors.push("strategy: set `strategy` or `strategies`".into());
        }
        if !(self.seed_fraction > 0.0 && self.seed_fraction < 1.0) {
            errors.push(format!("seed_fraction must be in (0, 1), got {}", self.seed_fraction));
        }
        if self.batch_size == 0 {
            errors.push("batch_size must be positive".into());
        }
        if self.rounds == 0 {
            errors.push("rounds must be positive".into());
        }
        if self.repetitions == 0 {
            errors.push("repetitions must be at least 1".into());
        }
        if self.mc_samples == 0 {
            errors.push("mc_samples must be at least 1".into());
        }
        if let Some(s) = self.ig_step_size {
            if !(s >= 0.0 && s.is_finite()) {
                errors.push(format!("ig_step_size must be finite and non-negative, got {s}"));
            }
        }
        errors.extend(self.dataset.validate());
        errors.extend(self.model.validate());
        errors.extend(self.train.validate());
        errors
    }

    /// Problems that depend on the loaded data.
    pub fn validate_against(&self, data: &Dataset) -> Vec<String> {
        let mut errors = Vec::new();
        let train = data.split_indices(Split::Train).len();
        if train == 0 {
            errors.push("dataset: training split is empty".into());
            return errors;
        }
        let pool = train - initial_labeled_count(train, self.seed_fraction);
        let needed = self.batch_size.saturating_mul(self.rounds);
        if needed > pool {
            errors.push(format!(
                "batch_size × rounds = {} × {} = {needed} exceeds the {pool} initially unlabeled training samples",
                self.batch_size, self.rounds
            ));
        }
        if data.split_indices(Split::Valid).is_empty() {
            errors.push("dataset: validation split is empty".into());
        }
        if data.split_indices(Split::Test).is_empty() {
            errors.push("dataset: test split is empty".into());
        }
        errors
    }
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}
