//! Entropies, the evaluation-set entropy H used by the information-gain
//! scores, macro one-vs-rest ROC AUC, and per-class acquisition tables.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::classifier::{dot, softmax_entropy, ClassifierHead, DenseLayer};
use crate::data::{AcquisitionRecord, FeaturePool};
use crate::error::{Error, Result};

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    if let Some(v) = p.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {v} is negative or NaN")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
    }
    Ok(entropy_of(p))
}

/// Entropy without validation. Callers guarantee a distribution.
pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Mean and per-sample predictive entropy over the evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySummary {
    pub mean_entropy: f64,
    pub per_sample_entropy: Vec<f64>,
}

/// Penultimate activations and output logits of the evaluation set, computed
/// once per trained head. Only the output layer changes while candidates are
/// scored.
#[derive(Debug, Clone)]
pub struct EvalCache {
    width: usize,
    classes: usize,
    activations: Vec<f64>,
    logits: Vec<f64>,
}

impl EvalCache {
    pub fn new(head: &ClassifierHead, pool: &FeaturePool) -> Result<Self> {
        let (width, classes) = (head.penultimate_dim(), head.num_classes());
        let mut activations = Vec::with_capacity(pool.eval().len() * width);
        let mut logits = vec![0.0; pool.eval().len() * classes];
        for (&i, z) in pool.eval().iter().zip(logits.chunks_exact_mut(classes)) {
            let a = head.penultimate_features(pool.features(i))?;
            head.output().forward_into(&a, z);
            activations.extend(a);
        }
        Ok(Self { width, classes, activations, logits })
    }

    pub fn len(&self) -> usize {
        self.logits.len() / self.classes.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.activations.chunks_exact(self.width)
    }

    pub fn logit_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.logits.chunks_exact(self.classes)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Entropy of the output layer's prediction for one penultimate activation.
fn output_entropy(output: &DenseLayer, activation: &[f64], logits: &mut [f64]) -> f64 {
    output.forward_into(activation, logits);
    softmax_entropy(logits)
}

/// Mean entropy of `output` over the cached evaluation activations.
pub fn cached_mean_entropy(output: &DenseLayer, cache: &EvalCache) -> f64 {
    let mut logits = vec![0.0; output.outputs()];
    mean(cache.rows().map(|a| output_entropy(output, a, &mut logits)))
}

/// Mean evaluation entropy after one output-layer step on a candidate, for
/// each assumed class.
///
/// A step on `(h_a, c)` moves weights by `−η·δ_c·h_aᵀ` and bias by `−η·δ_c`,
/// with `δ_c = p − e_c`. The logits of evaluation sample `k` therefore move by
/// `−η·(h_a·h_k + 1)·δ_c`, which needs one dot product per sample for all
/// classes together.
pub(crate) fn stepped_mean_entropies(
    cache: &EvalCache,
    activation: &[f64],
    predicted: &[f64],
    step_size: f64,
) -> Vec<f64> {
    let shifts: Vec<f64> = cache
        .rows()
        .map(|h| step_size * (dot(activation, h) + 1.0))
        .collect();
    let mut z = vec![0.0; cache.classes];
    (0..cache.classes)
        .map(|c| {
            mean(cache.logit_rows().zip(&shifts).map(|(logits, &s)| {
                for (o, (zo, &l)) in z.iter_mut().zip(logits).enumerate() {
                    let delta = predicted[o] - if o == c { 1.0 } else { 0.0 };
                    *zo = l - s * delta;
                }
                softmax_entropy(&z)
            }))
        })
        .collect()
}

/// Predictive entropy of `head` over the evaluation set, deterministic forward.
pub fn eval_set_entropy(
    head: &ClassifierHead,
    pool: &FeaturePool,
    cache: Option<&EvalCache>,
) -> Result<EntropySummary> {
    if pool.eval().is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let mut logits = vec![0.0; head.num_classes()];
    let per_sample_entropy: Vec<f64> = match cache {
        Some(cache) => cache.logit_rows().map(softmax_entropy).collect(),
        None => pool
            .eval()
            .iter()
            .map(|&i| {
                let a = head.penultimate_features(pool.features(i))?;
                Ok(output_entropy(head.output(), &a, &mut logits))
            })
            .collect::<Result<_>>()?,
    };
    Ok(EntropySummary {
        mean_entropy: mean(per_sample_entropy.iter().copied()),
        per_sample_entropy,
    })
}

/// Macro one-vs-rest AUC with per-class detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub macro_auc: f64,
    /// `None` for classes without both positive and negative samples.
    pub per_class: Vec<Option<f64>>,
    pub skipped_classes: Vec<usize>,
}

/// Mann–Whitney AUC with mid-rank ties. `None` when either side is empty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // ranks are 1-based; a tie group spanning ranks lo..=hi gets (lo + hi) / 2
    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let positives_in_group = order[start..end].iter().filter(|&&i| positive[i]).count();
        pos_rank_sum += mid_rank * positives_in_group as f64;
        start = end;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Unweighted mean over classes of the one-vs-rest ROC AUC of each score
/// column. Classes absent from `labels` (or covering all of them) are
/// skipped with a warning.
pub fn macro_ovr_auc(scores: &[Vec<f64>], labels: &[usize]) -> Result<AucReport> {
    if scores.len() != labels.len() {
        return Err(Error::ScoreShape {
            rows: scores.len(),
            labels: labels.len(),
        });
    }
    let num_classes = scores.first().map_or(0, Vec::len);
    if let Some(row) = scores.iter().find(|r| r.len() != num_classes) {
        return Err(Error::DimensionMismatch {
            expected: num_classes,
            got: row.len(),
        });
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::LabelOutOfRange {
            label: l,
            num_classes,
        });
    }
    let mut column = vec![0.0; scores.len()];
    let mut positive = vec![false; scores.len()];
    let mut per_class = Vec::with_capacity(num_classes);
    for c in 0..num_classes {
        for (k, (row, &label)) in scores.iter().zip(labels).enumerate() {
            column[k] = row[c];
            positive[k] = label == c;
        }
        per_class.push(binary_auc(&column, &positive));
    }
    let skipped_classes: Vec<usize> = (0..num_classes).filter(|&c| per_class[c].is_none()).collect();
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::UndefinedAuc);
    }
    if !skipped_classes.is_empty() {
        log::warn!("AUC undefined for classes {skipped_classes:?}; averaging the remaining classes");
    }
    Ok(AucReport {
        macro_auc: defined.iter().sum::<f64>() / defined.len() as f64,
        per_class,
        skipped_classes,
    })
}

/// Macro AUC of `head`'s deterministic predictions on labeled examples.
pub fn head_macro_auc(head: &ClassifierHead, examples: &[(&[f64], usize)]) -> Result<AucReport> {
    let scores = examples
        .iter()
        .map(|(x, _)| head.predict(x))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = examples.iter().map(|(_, y)| *y).collect();
    macro_ovr_auc(&scores, &labels)
}

/// Per-round and cumulative per-class acquisition counts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AcquisitionTables {
    pub per_round: Vec<Vec<usize>>,
    pub cumulative: Vec<Vec<usize>>,
}

pub fn acquisition_histogram(records: &[AcquisitionRecord]) -> Result<AcquisitionTables> {
    let mut tables = AcquisitionTables::default();
    for (i, rec) in records.iter().enumerate() {
        if rec.round != i + 1 {
            return Err(Error::RoundGap {
                expected: i + 1,
                found: rec.round,
            });
        }
        let cumulative = match tables.cumulative.last() {
            Some(prev) => prev.iter().zip(&rec.per_class_counts).map(|(a, b)| a + b).collect(),
            None => rec.per_class_counts.clone(),
        };
        tables.per_round.push(rec.per_class_counts.clone());
        tables.cumulative.push(cumulative);
    }
    Ok(tables)
}

/// Descending by score, ascending index on ties.
pub(crate) fn rank_order(a: (usize, f64), b: (usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive pair counting: concordant + ½·tied over positive-negative pairs.
    fn pair_count_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
        let (mut num, mut pairs) = (0.0, 0usize);
        for (i, &pi) in positive.iter().enumerate() {
            for (j, &pj) in positive.iter().enumerate() {
                if pi && !pj {
                    pairs += 1;
                    num += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        Ordering::Greater => 1.0,
                        Ordering::Equal => 0.5,
                        Ordering::Less => 0.0,
                    };
                }
            }
        }
        (pairs > 0).then(|| num / pairs as f64)
    }

    #[test]
    fn entropy_examples() {
        assert!((shannon_entropy(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!((shannon_entropy(&[0.5, 0.5]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(shannon_entropy(&[0.5, -0.1, 0.6]).is_err());
        assert!(shannon_entropy(&[0.5, 0.6]).is_err());
    }

    #[test]
    fn auc_examples() {
        let perfect = vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.3, 0.7], vec![0.1, 0.9]];
        assert_eq!(macro_ovr_auc(&perfect, &[0, 0, 1, 1]).unwrap().macro_auc, 1.0);

        let flat = vec![vec![0.2, 0.5, 0.3]; 6];
        let r = macro_ovr_auc(&flat, &[0, 1, 2, 0, 1, 2]).unwrap();
        assert_eq!(r.macro_auc, 0.5);
        assert!(r.per_class.iter().all(|a| *a == Some(0.5)));

        // positives score 0.9 and 0.4, negatives 0.6 and 0.1: 3 of 4 pairs concordant
        let s = vec![vec![0.1, 0.9], vec![0.6, 0.4], vec![0.4, 0.6], vec![0.9, 0.1]];
        let r = macro_ovr_auc(&s, &[1, 1, 0, 0]).unwrap();
        assert_eq!(r.per_class, vec![Some(0.75), Some(0.75)]);
        assert_eq!(r.macro_auc, 0.75);
    }

    #[test]
    fn absent_class_is_skipped() {
        let s = vec![vec![0.7, 0.2, 0.1], vec![0.2, 0.7, 0.1], vec![0.6, 0.3, 0.1]];
        let r = macro_ovr_auc(&s, &[0, 1, 0]).unwrap();
        assert_eq!(r.skipped_classes, vec![2]);
        assert_eq!(r.macro_auc, 1.0);
        assert!(matches!(
            macro_ovr_auc(&[vec![1.0, 0.0]], &[0]),
            Err(Error::UndefinedAuc)
        ));
        assert!(macro_ovr_auc(&s, &[0, 1]).is_err());
    }

    #[test]
    fn auc_matches_pair_counting() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let k = rng.random_range(2..=50);
            let c = rng.random_range(2..=5);
            // coarse grid forces ties
            let scores: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..c).map(|_| rng.random_range(0..8) as f64 / 8.0).collect())
                .collect();
            let labels: Vec<usize> = (0..k).map(|_| rng.random_range(0..c)).collect();
            let Ok(report) = macro_ovr_auc(&scores, &labels) else { continue };
            for cls in 0..c {
                let col: Vec<f64> = scores.iter().map(|r| r[cls]).collect();
                let pos: Vec<bool> = labels.iter().map(|&l| l == cls).collect();
                assert_eq!(report.per_class[cls], pair_count_auc(&col, &pos));
            }
        }
    }

    #[test]
    fn histogram_prefix_sums() {
        let rec = |round, counts: Vec<usize>| AcquisitionRecord {
            round,
            selected_indices: vec![],
            per_class_counts: counts,
            cumulative_per_class_counts: vec![],
        };
        let t = acquisition_histogram(&[rec(1, vec![2, 1]), rec(2, vec![0, 3])]).unwrap();
        assert_eq!(t.cumulative, vec![vec![2, 1], vec![2, 4]]);
        let t = acquisition_histogram(&[rec(1, vec![4, 1])]).unwrap();
        assert_eq!(t.cumulative, t.per_round);
        assert_eq!(acquisition_histogram(&[]).unwrap(), AcquisitionTables::default());
        assert!(matches!(
            acquisition_histogram(&[rec(1, vec![1]), rec(3, vec![1])]),
            Err(Error::RoundGap { expected: 2, found: 3 })
        ));
    }

    proptest! {
        #[test]
        fn entropy_is_bounded(raw in proptest::collection::vec(0.0f64..1.0, 1..8)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-9);
            let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let h = shannon_entropy(&p).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
        }

        #[test]
        fn auc_is_rank_invariant(
            scores in proptest::collection::vec(0.0f64..1.0, 4..40),
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let positive: Vec<bool> = scores.iter().map(|_| rng.random()).collect();
            let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert_eq!(binary_auc(&scores, &positive), binary_auc(&transformed, &positive));
        }
    }
}
