//! Acquisition strategies: information gain variants and baselines.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{softmax, ClassifierHead};
use crate::data::FeaturePool;
use crate::error::{Error, Result};
use crate::ig::{score_pool, IGScoreResult, IGWeighting, IgKind};
use crate::metrics::{entropy_of, rank_order};
use crate::seed;
use crate::work::{WorkCounters, WorkCounts};

/// Number of dropout passes used by the Monte Carlo dropout baselines.
pub const DEFAULT_MC_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyKind {
    Random,
    Entropy,
    McdEntropy,
    McdBald,
    CoreSet,
    Eig,
    Aeig,
    Uig,
    Cfig,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 9] = [
        StrategyKind::Random,
        StrategyKind::Entropy,
        StrategyKind::McdEntropy,
        StrategyKind::McdBald,
        StrategyKind::CoreSet,
        StrategyKind::Eig,
        StrategyKind::Aeig,
        StrategyKind::Uig,
        StrategyKind::Cfig,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Entropy => "entropy",
            StrategyKind::McdEntropy => "mcd-entropy",
            StrategyKind::McdBald => "mcd-bald",
            StrategyKind::CoreSet => "coreset",
            StrategyKind::Eig => "eig",
            StrategyKind::Aeig => "aeig",
            StrategyKind::Uig => "uig",
            StrategyKind::Cfig => "cfig",
        }
    }

    pub fn ig_kind(self) -> Option<IgKind> {
        match self {
            StrategyKind::Eig => Some(IgKind::Eig),
            StrategyKind::Aeig => Some(IgKind::Aeig),
            StrategyKind::Uig => Some(IgKind::Uig),
            StrategyKind::Cfig => Some(IgKind::Cfig),
            _ => None,
        }
    }

    pub fn uses_dropout_sampling(self) -> bool {
        matches!(self, StrategyKind::McdEntropy | StrategyKind::McdBald)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    /// Case-insensitive; `-` and `_` are ignored, so `MCD_BALD` and `mcdbald` both parse.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .flat_map(char::to_lowercase)
            .collect();
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().replace('-', "") == key)
            .ok_or_else(|| {
                let known: Vec<_> = StrategyKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(vec![format!("unknown strategy `{s}` (expected one of {})", known.join(", "))])
            })
    }
}

impl TryFrom<String> for StrategyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StrategyKind> for String {
    fn from(k: StrategyKind) -> String {
        k.name().to_owned()
    }
}

/// Per-candidate scores in ascending index order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreVector {
    pub entries: Vec<(usize, f64)>,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The `budget` highest scores, ties broken by ascending index.
pub fn select_top_b(scores: &ScoreVector, budget: usize) -> Result<Vec<usize>> {
    if budget > scores.len() {
        return Err(Error::BudgetExceedsPool { budget, available: scores.len() });
    }
    if let Some(&(i, _)) = scores.entries.iter().find(|(_, s)| !s.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    let mut ranked = scores.entries.clone();
    ranked.sort_by(|&a, &b| rank_order(a, b));
    Ok(ranked.into_iter().take(budget).map(|(i, _)| i).collect())
}

/// Predictive entropy of a single deterministic forward pass.
pub fn entropy_score(head: &ClassifierHead, x: &[f64]) -> Result<f64> {
    Ok(entropy_of(&head.predict(x)?))
}

/// `t` dropout-active predictive distributions for `x`.
pub fn mcd_draws(head: &ClassifierHead, x: &[f64], t: usize, rng: &mut dyn RngCore) -> Result<Vec<Vec<f64>>> {
    if t == 0 {
        return Err(Error::Config(vec!["mc_samples must be at least 1".into()]));
    }
    let pen = head.penultimate_features(x)?;
    Ok((0..t)
        .map(|_| softmax(&head.dropout_logits_from_penultimate(&pen, rng)))
        .collect())
}

/// Entropy of the mean draw and the mutual information between label and dropout mask.
pub fn mcd_scores_from_draws(draws: &[Vec<f64>]) -> (f64, f64) {
    let t = draws.len() as f64;
    let classes = draws[0].len();
    let mut mean = vec![0.0; classes];
    for d in draws {
        for (m, p) in mean.iter_mut().zip(d) {
            *m += p;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t);
    let entropy = entropy_of(&mean);
    let expected: f64 = draws.iter().map(|d| entropy_of(d)).sum::<f64>() / t;
    (entropy, entropy - expected)
}

pub fn mcd_entropy_score(head: &ClassifierHead, x: &[f64], t: usize, rng: &mut dyn RngCore) -> Result<f64> {
    Ok(mcd_scores_from_draws(&mcd_draws(head, x, t, rng)?).0)
}

pub fn mcd_bald_score(head: &ClassifierHead, x: &[f64], t: usize, rng: &mut dyn RngCore) -> Result<f64> {
    Ok(mcd_scores_from_draws(&mcd_draws(head, x, t, rng)?).1)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy k-center selection: repeatedly takes the candidate farthest from
/// its nearest center. Ties go to the lowest candidate index.
pub fn k_center_greedy(
    centers: &[&[f64]],
    candidates: &[(usize, &[f64])],
    budget: usize,
    counters: &WorkCounters,
) -> Result<Vec<usize>> {
    if budget > candidates.len() {
        return Err(Error::BudgetExceedsPool { budget, available: candidates.len() });
    }
    let mut nearest: Vec<f64> = candidates
        .par_iter()
        .map(|(_, x)| {
            centers
                .iter()
                .map(|c| squared_distance(x, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    counters.add_distance_evals((centers.len() * candidates.len()) as u64);

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&k| candidates[k].0);
    let mut taken = vec![false; candidates.len()];
    let mut selected = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<usize> = None;
        for &k in &order {
            if taken[k] {
                continue;
            }
            if best.is_none_or(|b| nearest[k] > nearest[b]) {
                best = Some(k);
            }
        }
        let Some(b) = best else { break };
        taken[b] = true;
        selected.push(candidates[b].0);
        let center = candidates[b].1;
        nearest
            .par_iter_mut()
            .zip(candidates.par_iter())
            .for_each(|(d, (_, x))| *d = d.min(squared_distance(x, center)));
        counters.add_distance_evals(candidates.len() as u64);
    }
    Ok(selected)
}

/// CoreSet selection in the head's penultimate embedding space.
pub fn coreset_select(
    head: &ClassifierHead,
    pool: &FeaturePool,
    budget: usize,
    counters: &WorkCounters,
) -> Result<Vec<usize>> {
    let embed = |indices: Vec<usize>| -> Result<Vec<(usize, Vec<f64>)>> {
        indices
            .into_par_iter()
            .map(|i| Ok((i, head.penultimate_features(pool.features(i))?)))
            .collect()
    };
    let labeled = embed(pool.labeled().iter().copied().collect())?;
    let unlabeled = embed(pool.unlabeled().iter().copied().collect())?;
    let centers: Vec<&[f64]> = labeled.iter().map(|(_, e)| e.as_slice()).collect();
    let candidates: Vec<(usize, &[f64])> = unlabeled.iter().map(|(i, e)| (*i, e.as_slice())).collect();
    k_center_greedy(&centers, &candidates, budget, counters)
}

/// Uniform draw of `budget` unlabeled indices.
pub fn random_select(pool: &FeaturePool, budget: usize, rng: &mut impl rand::Rng) -> Result<Vec<usize>> {
    let unlabeled: Vec<usize> = pool.unlabeled().iter().copied().collect();
    if budget > unlabeled.len() {
        return Err(Error::BudgetExceedsPool { budget, available: unlabeled.len() });
    }
    Ok(index::sample(rng, unlabeled.len(), budget)
        .into_iter()
        .map(|k| unlabeled[k])
        .collect())
}

/// Everything a strategy needs for one acquisition round.
#[derive(Debug, Clone, Copy)]
pub struct AcquisitionRequest<'a> {
    pub head: &'a ClassifierHead,
    pub pool: &'a FeaturePool,
    pub budget: usize,
    /// Gradient step size for information-gain scores.
    pub step_size: f64,
    pub mc_samples: usize,
    /// Seed for every random choice made this round.
    pub round_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub selected: Vec<usize>,
    /// Per-candidate scores, absent for random and CoreSet.
    pub scores: Option<ScoreVector>,
    /// Decomposed scores for information-gain strategies.
    pub ig_results: Option<Vec<IGScoreResult>>,
    pub work: WorkCounts,
}

pub fn acquire(kind: StrategyKind, req: &AcquisitionRequest<'_>) -> Result<Acquisition> {
    let pool = req.pool;
    if pool.unlabeled().is_empty() {
        return Err(Error::EmptyUnlabeledPool);
    }
    if req.budget > pool.unlabeled().len() {
        return Err(Error::BudgetExceedsPool { budget: req.budget, available: pool.unlabeled().len() });
    }
    let counters = WorkCounters::new();
    let candidates: Vec<usize> = pool.unlabeled().iter().copied().collect();
    let per_candidate = |f: &(dyn Fn(usize) -> Result<f64> + Sync)| -> Result<ScoreVector> {
        let entries = candidates
            .par_iter()
            .map(|&i| Ok((i, f(i)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScoreVector { entries })
    };

    let (selected, scores, ig_results) = match kind {
        StrategyKind::Random => {
            let mut rng = seed::rng(req.round_seed, &[0]);
            (random_select(pool, req.budget, &mut rng)?, None, None)
        }
        StrategyKind::CoreSet => (coreset_select(req.head, pool, req.budget, &counters)?, None, None),
        StrategyKind::Entropy => {
            let scores = per_candidate(&|i| entropy_score(req.head, pool.features(i)))?;
            counters.add_forwards(candidates.len() as u64);
            (select_top_b(&scores, req.budget)?, Some(scores), None)
        }
        StrategyKind::McdEntropy | StrategyKind::McdBald => {
            let bald = kind == StrategyKind::McdBald;
            let t = req.mc_samples;
            let scores = per_candidate(&|i| {
                let mut rng = seed::rng(req.round_seed, &[i as u64]);
                let (h, mi) = mcd_scores_from_draws(&mcd_draws(req.head, pool.features(i), t, &mut rng)?);
                Ok(if bald { mi } else { h })
            })?;
            counters.add_forwards((candidates.len() * t) as u64);
            (select_top_b(&scores, req.budget)?, Some(scores), None)
        }
        StrategyKind::Eig | StrategyKind::Aeig | StrategyKind::Uig | StrategyKind::Cfig => {
            let ig = kind.ig_kind().expect("information-gain strategy");
            let freqs = ig.needs_frequencies().then(|| pool.eval_class_frequencies()).transpose()?;
            let weighting = IGWeighting::new(ig, freqs)?;
            let results = score_pool(req.head, pool, &weighting, req.step_size, &counters)?;
            let scores = ScoreVector {
                entries: results.iter().map(|r| (r.candidate_index, r.score)).collect(),
            };
            (select_top_b(&scores, req.budget)?, Some(scores), Some(results))
        }
    };
    Ok(Acquisition {
        selected,
        scores,
        ig_results,
        work: counters.snapshot(candidates.len()),
    })
}
