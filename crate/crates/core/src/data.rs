//! Datasets, the labeled/unlabeled/evaluation partition, and pool bookkeeping.
//!
//! A [`FeaturePool`] owns the partition of the training split into a labeled
//! set and an unlabeled set. The validation split is the evaluation set used
//! by the information-gain scores, and the test split is only used for
//! reporting. Ground-truth labels of unlabeled samples stay inside the pool:
//! [`FeaturePool::label`] returns `None` for them, and they are revealed only
//! by [`FeaturePool::apply_acquisition`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (expected train, valid or test)")),
        }
    }
}

/// One feature vector with its stable global index.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub index: usize,
    pub features: Vec<f64>,
    pub label: Option<usize>,
}

/// All samples of all splits, indexed in load order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    num_classes: usize,
    samples: Vec<Sample>,
    splits: Vec<Split>,
}

impl Dataset {
    /// Builds a dataset from `(features, label, split)` rows. Indices are
    /// assigned in row order.
    pub fn new(
        dim: usize,
        num_classes: usize,
        rows: impl IntoIterator<Item = (Vec<f64>, Option<usize>, Split)>,
    ) -> Result<Self> {
        let mut samples = Vec::new();
        let mut splits = Vec::new();
        for (index, (features, label, split)) in rows.into_iter().enumerate() {
            if features.len() != dim {
                return Err(Error::FeatureLength {
                    index,
                    expected: dim,
                    got: features.len(),
                });
            }
            if let Some(label) = label {
                if label >= num_classes {
                    return Err(Error::LabelOutOfRange { label, num_classes });
                }
            }
            samples.push(Sample {
                index,
                features,
                label,
            });
            splits.push(split);
        }
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            dim,
            num_classes,
            samples,
            splits,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, index: usize) -> &Sample {
        &self.samples[index]
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn split_of(&self, index: usize) -> Split {
        self.splits[index]
    }

    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        self.splits
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == split)
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-class label counts of one split. Unlabeled samples are not counted.
    pub fn class_counts(&self, split: Split) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for (sample, s) in self.samples.iter().zip(&self.splits) {
            if *s == split {
                if let Some(label) = sample.label {
                    counts[label] += 1;
                }
            }
        }
        counts
    }
}

/// Evaluation-set class counts and their normalized weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFrequencies {
    counts: Vec<usize>,
    weights: Vec<f64>,
}

impl ClassFrequencies {
    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyEvalSet);
        }
        let weights = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { counts, weights })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }
}

/// Which samples one acquisition round labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionRecord {
    pub round: usize,
    pub selected_indices: Vec<usize>,
    pub per_class_counts: Vec<usize>,
    pub cumulative_per_class_counts: Vec<usize>,
}

/// The labeled / unlabeled / evaluation partition of a dataset.
#[derive(Debug, Clone)]
pub struct FeaturePool {
    data: Arc<Dataset>,
    labeled: BTreeSet<usize>,
    unlabeled: BTreeSet<usize>,
    eval: Vec<usize>,
    test: Vec<usize>,
    train_size: usize,
    initial_labeled: usize,
    acquired_per_class: Vec<usize>,
    rounds_applied: usize,
}

impl FeaturePool {
    /// Labels a uniformly drawn `⌊seed_fraction · |train|⌋` subset of the
    /// training split; the rest of the training split is unlabeled.
    pub fn initialize(data: Arc<Dataset>, seed_fraction: f64, rng_seed: u64) -> Result<Self> {
        if !(seed_fraction > 0.0 && seed_fraction < 1.0) {
            return Err(Error::InvalidSeedFraction(seed_fraction));
        }
        let train = data.split_indices(Split::Train);
        if train.is_empty() {
            return Err(Error::EmptyTrainSplit);
        }
        let n_seed = initial_labeled_count(train.len(), seed_fraction);
        let mut rng = seed::rng(rng_seed, &[seed::Stream::InitialPool as u64]);
        let picked: BTreeSet<usize> = index::sample(&mut rng, train.len(), n_seed)
            .into_iter()
            .map(|i| train[i])
            .collect();
        Self::with_labeled(data, picked)
    }

    /// A pool whose whole training split is labeled.
    pub fn fully_labeled(data: Arc<Dataset>) -> Result<Self> {
        let train: BTreeSet<usize> = data.split_indices(Split::Train).into_iter().collect();
        if train.is_empty() {
            return Err(Error::EmptyTrainSplit);
        }
        Self::with_labeled(data, train)
    }

    /// A pool with an explicit labeled subset of the training split.
    pub fn with_labeled(data: Arc<Dataset>, labeled: BTreeSet<usize>) -> Result<Self> {
        let train = data.split_indices(Split::Train);
        for &i in &labeled {
            if i >= data.len() || data.split_of(i) != Split::Train {
                return Err(Error::NotUnlabeled(i));
            }
            if data.sample(i).label.is_none() {
                return Err(Error::MissingOracleLabel(i));
            }
        }
        let unlabeled = train.iter().copied().filter(|i| !labeled.contains(i)).collect();
        Ok(Self {
            eval: data.split_indices(Split::Valid),
            test: data.split_indices(Split::Test),
            train_size: train.len(),
            initial_labeled: labeled.len(),
            acquired_per_class: vec![0; data.num_classes()],
            rounds_applied: 0,
            labeled,
            unlabeled,
            data,
        })
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn num_classes(&self) -> usize {
        self.data.num_classes()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn labeled(&self) -> &BTreeSet<usize> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<usize> {
        &self.unlabeled
    }

    pub fn eval(&self) -> &[usize] {
        &self.eval
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }

    pub fn train_size(&self) -> usize {
        self.train_size
    }

    pub fn initial_labeled_size(&self) -> usize {
        self.initial_labeled
    }

    pub fn rounds_applied(&self) -> usize {
        self.rounds_applied
    }

    pub fn labeled_fraction(&self) -> f64 {
        self.labeled.len() as f64 / self.train_size as f64
    }

    pub fn features(&self, index: usize) -> &[f64] {
        &self.data.sample(index).features
    }

    /// The label of a sample, or `None` while it sits in the unlabeled pool.
    pub fn label(&self, index: usize) -> Option<usize> {
        if self.unlabeled.contains(&index) {
            None
        } else {
            self.data.sample(index).label
        }
    }

    pub fn labeled_examples(&self) -> Vec<(&[f64], usize)> {
        self.labeled
            .iter()
            .map(|&i| (self.features(i), self.data.sample(i).label.expect("labeled sample")))
            .collect()
    }

    /// `(features, label)` pairs of the evaluation set; errors if any lacks a label.
    pub fn eval_examples(&self) -> Result<Vec<(&[f64], usize)>> {
        self.split_examples(&self.eval)
    }

    pub fn test_examples(&self) -> Result<Vec<(&[f64], usize)>> {
        self.split_examples(&self.test)
    }

    fn split_examples<'a>(&'a self, indices: &[usize]) -> Result<Vec<(&'a [f64], usize)>> {
        indices
            .iter()
            .map(|&i| {
                self.data
                    .sample(i)
                    .label
                    .map(|l| (self.features(i), l))
                    .ok_or(Error::UnlabeledEvalSample(i))
            })
            .collect()
    }

    /// Moves `selected` from the unlabeled to the labeled set, revealing their
    /// ground-truth labels. The pool is unchanged when an error is returned.
    pub fn apply_acquisition(&mut self, selected: &[usize]) -> Result<AcquisitionRecord> {
        let mut seen = BTreeSet::new();
        let mut per_class = vec![0; self.num_classes()];
        for &i in selected {
            if !seen.insert(i) {
                return Err(Error::DuplicateIndex(i));
            }
            if !self.unlabeled.contains(&i) {
                return Err(Error::NotUnlabeled(i));
            }
            let label = self.data.sample(i).label.ok_or(Error::MissingOracleLabel(i))?;
            per_class[label] += 1;
        }
        for &i in selected {
            self.unlabeled.remove(&i);
            self.labeled.insert(i);
        }
        for (acc, n) in self.acquired_per_class.iter_mut().zip(&per_class) {
            *acc += n;
        }
        self.rounds_applied += 1;
        Ok(AcquisitionRecord {
            round: self.rounds_applied,
            selected_indices: selected.to_vec(),
            per_class_counts: per_class,
            cumulative_per_class_counts: self.acquired_per_class.clone(),
        })
    }

    /// Class counts and weights of the evaluation (validation) set.
    pub fn eval_class_frequencies(&self) -> Result<ClassFrequencies> {
        if self.eval.is_empty() {
            return Err(Error::EmptyEvalSet);
        }
        let mut counts = vec![0; self.num_classes()];
        for (_, label) in self.eval_examples()? {
            counts[label] += 1;
        }
        ClassFrequencies::from_counts(counts)
    }
}

/// `⌊fraction · train_size⌋`, robust to the representation error of the fraction.
pub fn initial_labeled_count(train_size: usize, fraction: f64) -> usize {
    (fraction * train_size as f64 + 1e-9).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(train_labels: &[usize], valid_labels: &[usize], num_classes: usize) -> Arc<Dataset> {
        let rows = train_labels
            .iter()
            .map(|&l| (vec![l as f64], Some(l), Split::Train))
            .chain(valid_labels.iter().map(|&l| (vec![l as f64], Some(l), Split::Valid)));
        Arc::new(Dataset::new(1, num_classes, rows).unwrap())
    }

    #[test]
    fn seed_set_sizes_match_protocol() {
        let dr = toy(&vec![0; 5000], &[0], 1);
        let pool = FeaturePool::initialize(dr, 0.10, 3).unwrap();
        assert_eq!(pool.labeled().len(), 500);
        assert_eq!(pool.unlabeled().len(), 4500);

        let isic = toy(&vec![0; 6000], &[0], 1);
        let pool = FeaturePool::initialize(isic, 0.10, 3).unwrap();
        assert_eq!(pool.labeled().len(), 600);
        assert_eq!(pool.unlabeled().len(), 5400);
    }

    #[test]
    fn initialization_is_seeded() {
        let data = toy(&[0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2], &[0], 3);
        let a = FeaturePool::initialize(data.clone(), 0.5, 11).unwrap();
        let b = FeaturePool::initialize(data.clone(), 0.5, 11).unwrap();
        assert_eq!(a.labeled(), b.labeled());
        let others: Vec<_> = (0..20)
            .map(|s| FeaturePool::initialize(data.clone(), 0.5, s).unwrap().labeled().clone())
            .collect();
        assert!(others.iter().any(|l| l != a.labeled()));
    }

    #[test]
    fn rejects_bad_fraction_and_empty_train() {
        let data = toy(&[0, 1], &[0], 2);
        for f in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(
                FeaturePool::initialize(data.clone(), f, 0),
                Err(Error::InvalidSeedFraction(_))
            ));
        }
        let no_train = Arc::new(Dataset::new(1, 1, [(vec![0.0], Some(0), Split::Valid)]).unwrap());
        assert!(matches!(
            FeaturePool::initialize(no_train, 0.1, 0),
            Err(Error::EmptyTrainSplit)
        ));
        assert!(matches!(
            Dataset::new(1, 1, Vec::<(Vec<f64>, Option<usize>, Split)>::new()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn acquisition_moves_and_counts() {
        let labels: Vec<usize> = (0..110).map(|i| i % 3).collect();
        let data = toy(&labels, &[0], 3);
        let mut pool = FeaturePool::with_labeled(data, (0..10).collect()).unwrap();
        assert_eq!(pool.unlabeled().len(), 100);
        let hidden = 20;
        assert_eq!(pool.label(hidden), None);

        let selected: Vec<usize> = (20..30).collect();
        let rec = pool.apply_acquisition(&selected).unwrap();
        assert_eq!(pool.unlabeled().len(), 90);
        assert_eq!(pool.labeled().len(), 20);
        assert_eq!(rec.round, 1);
        assert_eq!(rec.per_class_counts.iter().sum::<usize>(), 10);
        assert_eq!(pool.label(hidden), Some(20 % 3));
    }

    #[test]
    fn per_class_tally() {
        // samples 2..6 carry labels [0, 0, 1, 2]
        let data = toy(&[0, 0, 0, 0, 1, 2], &[0], 3);
        let mut pool = FeaturePool::with_labeled(data, [0, 1].into()).unwrap();
        let rec = pool.apply_acquisition(&[2, 3, 4, 5]).unwrap();
        assert_eq!(rec.per_class_counts, vec![2, 1, 1]);
        assert_eq!(rec.cumulative_per_class_counts, vec![2, 1, 1]);
    }

    #[test]
    fn acquisition_errors_leave_pool_untouched() {
        let data = toy(&[0, 1, 0, 1, 0, 1], &[0], 2);
        let mut pool = FeaturePool::with_labeled(data, [0, 1].into()).unwrap();
        assert!(matches!(pool.apply_acquisition(&[2, 0]), Err(Error::NotUnlabeled(0))));
        assert!(matches!(pool.apply_acquisition(&[3, 3]), Err(Error::DuplicateIndex(3))));
        assert!(matches!(pool.apply_acquisition(&[6]), Err(Error::NotUnlabeled(6))));
        assert_eq!(pool.labeled().len(), 2);
        assert_eq!(pool.unlabeled().len(), 4);
        assert_eq!(pool.rounds_applied(), 0);
    }

    #[test]
    fn dr_eval_frequencies() {
        let freq = ClassFrequencies::from_counts(vec![6150, 588, 1283, 221, 166]).unwrap();
        let expected = [0.7314, 0.0699, 0.1526, 0.0263, 0.0197];
        for (w, e) in freq.weights().iter().zip(expected) {
            assert!((w - e).abs() < 5e-5, "{w} vs {e}");
        }
        assert!((freq.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eval_frequency_edge_cases() {
        let pool = FeaturePool::with_labeled(toy(&[0, 1, 2], &[0, 1, 2, 2, 1, 0], 3), [0].into())
            .unwrap();
        let f = pool.eval_class_frequencies().unwrap();
        assert_eq!(f.counts(), &[2, 2, 2]);
        assert!(f.weights().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));

        let pool =
            FeaturePool::with_labeled(toy(&[0, 1, 2], &[1, 1], 3), [0].into()).unwrap();
        assert_eq!(pool.eval_class_frequencies().unwrap().weights(), &[0.0, 1.0, 0.0]);

        let pool = FeaturePool::with_labeled(toy(&[0, 1, 2], &[], 3), [0].into()).unwrap();
        assert!(matches!(pool.eval_class_frequencies(), Err(Error::EmptyEvalSet)));

        let rows = vec![
            (vec![0.0], Some(0), Split::Train),
            (vec![0.0], None, Split::Valid),
        ];
        let data = Arc::new(Dataset::new(1, 1, rows).unwrap());
        let pool = FeaturePool::with_labeled(data, [0].into()).unwrap();
        assert!(matches!(
            pool.eval_class_frequencies(),
            Err(Error::UnlabeledEvalSample(1))
        ));
    }
}
