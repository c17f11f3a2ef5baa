//! Seeded Gaussian-blob datasets with prescribed per-class counts.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Class proportions of the fundus-photograph grading task the `dr-like` preset mimics.
const DR_PROPORTIONS: [f64; 5] = [6150.0, 588.0, 1283.0, 221.0, 166.0];
/// Class proportions of the dermoscopy task the `isic-like` preset mimics.
const ISIC_PROPORTIONS: [f64; 7] = [1113.0, 6705.0, 514.0, 327.0, 1099.0, 115.0, 142.0];

pub const PRESETS: [&str; 2] = ["dr-like", "isic-like"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub dimension: usize,
    pub train_counts: Vec<usize>,
    pub valid_counts: Vec<usize>,
    pub test_counts: Vec<usize>,
    /// Distance between any two class means, in units of the per-coordinate
    /// standard deviation.
    pub cluster_separation: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl SyntheticSpec {
    pub fn preset(name: &str, rng_seed: u64) -> Result<Self> {
        let (proportions, totals): (&[f64], [usize; 3]) = match name {
            "dr-like" => (&DR_PROPORTIONS, [5000, 1000, 2000]),
            "isic-like" => (&ISIC_PROPORTIONS, [6000, 1500, 2515]),
            _ => {
                return Err(Error::Config(vec![format!(
                    "dataset.preset: unknown preset `{name}` (expected one of {})",
                    PRESETS.join(", ")
                )]))
            }
        };
        Ok(Self {
            num_classes: proportions.len(),
            dimension: 32,
            train_counts: scale_counts(proportions, totals[0]),
            valid_counts: scale_counts(proportions, totals[1]),
            test_counts: scale_counts(proportions, totals[2]),
            cluster_separation: 3.0,
            rng_seed,
        })
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.num_classes < 2 {
            errors.push(format!("num_classes must be at least 2 (got {})", self.num_classes));
        }
        if self.dimension < self.num_classes {
            errors.push(format!(
                "dimension must be at least num_classes = {} to place equidistant class means (got {})",
                self.num_classes, self.dimension
            ));
        }
        for (field, counts) in [
            ("train_counts", &self.train_counts),
            ("valid_counts", &self.valid_counts),
            ("test_counts", &self.test_counts),
        ] {
            if counts.len() != self.num_classes {
                errors.push(format!(
                    "{field} must have num_classes = {} entries (got {})",
                    self.num_classes,
                    counts.len()
                ));
            } else if counts.iter().all(|&c| c == 0) {
                errors.push(format!("{field} must contain at least one positive count"));
            }
        }
        if !(self.cluster_separation >= 0.0 && self.cluster_separation.is_finite()) {
            errors.push(format!(
                "cluster_separation must be a finite non-negative number (got {})",
                self.cluster_separation
            ));
        }
        errors
    }

    pub fn total(&self) -> usize {
        [&self.train_counts, &self.valid_counts, &self.test_counts]
            .iter()
            .flat_map(|c| c.iter())
            .sum()
    }
}

/// Scales `proportions` to integers summing to `total`, by largest remainder.
pub fn scale_counts(proportions: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = proportions.iter().sum();
    let exact: Vec<f64> = proportions.iter().map(|p| p / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut by_remainder: Vec<usize> = (0..exact.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let short = total - counts.iter().sum::<usize>();
    for &k in by_remainder.iter().take(short) {
        counts[k] += 1;
    }
    counts
}

/// Class means: an orthonormal frame from Gram-Schmidt on Gaussian vectors,
/// scaled so that every pair of means is `separation` apart.
fn class_means(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(spec.rng_seed, &[Stream::Synthetic as u64, 0]);
    let d = spec.dimension;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(spec.num_classes);
    while basis.len() < spec.num_classes {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        for q in &basis {
            let proj: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let scale = spec.cluster_separation / std::f64::consts::SQRT_2;
    basis
        .into_iter()
        .map(|q| q.into_iter().map(|a| a * scale).collect())
        .collect()
}

/// Draws the dataset: train rows first, then valid, then test, each split
/// shuffled. The same spec always yields the same bits.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    let errors = spec.validate();
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let means = class_means(spec);
    let mut rows = Vec::with_capacity(spec.total());
    for (k, (split, counts)) in [
        (Split::Train, &spec.train_counts),
        (Split::Valid, &spec.valid_counts),
        (Split::Test, &spec.test_counts),
    ]
    .into_iter()
    .enumerate()
    {
        let mut rng = seed::rng(spec.rng_seed, &[Stream::Synthetic as u64, 1 + k as u64]);
        let mut labels: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        labels.shuffle(&mut rng);
        for y in labels {
            let x: Vec<f64> = means[y]
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + z
                })
                .collect();
            rows.push((x, Some(y), split));
        }
    }
    Dataset::new(spec.dimension, spec.num_classes, rows)
}
