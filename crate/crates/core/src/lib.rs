//! Pool-based active learning with information-gain acquisition.
//!
//! A small classifier head is trained on the labeled part of a
//! [`FeaturePool`]; an acquisition [`StrategyKind`] scores the unlabeled
//! candidates; the top `B` are labeled; the loop repeats. The
//! information-gain scores in [`ig`] estimate how much one labeled sample
//! would lower the predictive entropy on the validation set.

pub mod classifier;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod ig;
pub mod io;
pub mod metrics;
pub mod seed;
pub mod strategy;
pub mod work;

pub use classifier::{Architecture, ClassifierHead, TrainConfig};
pub use config::{DatasetConfig, ExperimentConfig, OutputConfig};
pub use data::{AcquisitionRecord, ClassFrequencies, Dataset, FeaturePool, Split};
pub use error::{Error, Result};
pub use experiment::{
    full_data_reference, percent_to_target, run_experiment, Aggregate, ExperimentOutcome, RunRecord,
};
pub use ig::{IGScoreResult, IGWeighting, IgKind};
pub use io::SyntheticSpec;
pub use strategy::StrategyKind;
pub use work::{WorkCounters, WorkCounts};
