//! Information-gain acquisition scores.
//!
//! For a candidate `x_a`, the score is
//!
//! ```text
//! score = H1 − Σ_c w_c · H2(c)
//! ```
//!
//! where H1 is the mean predictive entropy over the evaluation set under the
//! trained head, and H2(c) is the same quantity after one steepest-descent
//! step of the output layer on `(x_a, c)`. The class weights `w` depend on
//! the [`IgKind`]:
//!
//! | kind | `w_c` |
//! |------|-------|
//! | EIG  | `p(c | x_a)` |
//! | AEIG | `p(c | x_a) · freq_c` (not renormalized) |
//! | UIG  | `1 / C` |
//! | CFIG | `freq_c` |
//!
//! `freq` are the evaluation-set class frequencies and `p` is the prediction
//! of the head before the step.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{softmax, ClassifierHead};
use crate::data::{ClassFrequencies, FeaturePool};
use crate::error::{Error, Result};
use crate::metrics::{eval_set_entropy, stepped_mean_entropies, EntropySummary, EvalCache};
use crate::work::WorkCounters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IgKind {
    Eig,
    Aeig,
    Uig,
    Cfig,
}

impl IgKind {
    pub fn needs_frequencies(self) -> bool {
        matches!(self, IgKind::Aeig | IgKind::Cfig)
    }

    fn name(self) -> &'static str {
        match self {
            IgKind::Eig => "EIG",
            IgKind::Aeig => "AEIG",
            IgKind::Uig => "UIG",
            IgKind::Cfig => "CFIG",
        }
    }
}

impl fmt::Display for IgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The class weighting of H2, with the frequencies it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct IGWeighting {
    kind: IgKind,
    frequencies: Option<ClassFrequencies>,
}

impl IGWeighting {
    pub fn new(kind: IgKind, frequencies: Option<ClassFrequencies>) -> Result<Self> {
        if kind.needs_frequencies() && frequencies.is_none() {
            return Err(Error::MissingFrequencies(kind.name()));
        }
        let frequencies = frequencies.filter(|_| kind.needs_frequencies());
        Ok(Self { kind, frequencies })
    }

    pub fn eig() -> Self {
        Self { kind: IgKind::Eig, frequencies: None }
    }

    pub fn uig() -> Self {
        Self { kind: IgKind::Uig, frequencies: None }
    }

    pub fn aeig(frequencies: ClassFrequencies) -> Self {
        Self { kind: IgKind::Aeig, frequencies: Some(frequencies) }
    }

    pub fn cfig(frequencies: ClassFrequencies) -> Self {
        Self { kind: IgKind::Cfig, frequencies: Some(frequencies) }
    }

    pub fn kind(&self) -> IgKind {
        self.kind
    }

    pub fn frequencies(&self) -> Option<&ClassFrequencies> {
        self.frequencies.as_ref()
    }

    /// Weights `w_c` multiplying H2(c), given the candidate's predicted distribution.
    pub fn class_weights(&self, predicted: &[f64]) -> Result<Vec<f64>> {
        let freq = || {
            self.frequencies
                .as_ref()
                .map(ClassFrequencies::weights)
                .ok_or(Error::MissingFrequencies(self.kind.name()))
        };
        let check_len = |w: &[f64]| {
            if w.len() != predicted.len() {
                Err(Error::DimensionMismatch { expected: predicted.len(), got: w.len() })
            } else {
                Ok(())
            }
        };
        Ok(match self.kind {
            IgKind::Eig => predicted.to_vec(),
            IgKind::Aeig => {
                let f = freq()?;
                check_len(f)?;
                predicted.iter().zip(f).map(|(p, w)| p * w).collect()
            }
            IgKind::Uig => vec![1.0 / predicted.len() as f64; predicted.len()],
            IgKind::Cfig => {
                let f = freq()?;
                check_len(f)?;
                f.to_vec()
            }
        })
    }
}

/// Score of one candidate with its decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IGScoreResult {
    pub candidate_index: usize,
    pub score: f64,
    pub h1: f64,
    pub per_class_h2: Vec<f64>,
    pub per_class_weight: Vec<f64>,
}

/// Per-round state shared by every candidate: the evaluation activations and H1.
#[derive(Debug, Clone)]
pub struct RoundState {
    pub cache: EvalCache,
    pub h1: EntropySummary,
}

impl RoundState {
    pub fn prepare(head: &ClassifierHead, pool: &FeaturePool) -> Result<Self> {
        let cache = EvalCache::new(head, pool)?;
        let h1 = eval_set_entropy(head, pool, Some(&cache))?;
        Ok(Self { cache, h1 })
    }
}

/// Scores one unlabeled candidate. `state` must come from the same head.
pub fn score_candidate(
    head: &ClassifierHead,
    pool: &FeaturePool,
    candidate: usize,
    weighting: &IGWeighting,
    step_size: f64,
    state: &RoundState,
    counters: &WorkCounters,
) -> Result<IGScoreResult> {
    if !pool.unlabeled().contains(&candidate) {
        return Err(Error::NotUnlabeled(candidate));
    }
    let activation = head.penultimate_features(pool.features(candidate))?;
    let predicted = softmax(&head.logits_from_penultimate(&activation));
    let weights = weighting.class_weights(&predicted)?;

    if predicted.iter().chain(&activation).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    let classes = head.num_classes();
    let per_class_h2 = stepped_mean_entropies(&state.cache, &activation, &predicted, step_size);
    counters.add_gradient_steps(classes as u64);
    counters.add_eval_forwards((classes * state.cache.len()) as u64);

    let h1 = state.h1.mean_entropy;
    let expected_h2: f64 = weights.iter().zip(&per_class_h2).map(|(w, h)| w * h).sum();
    Ok(IGScoreResult {
        candidate_index: candidate,
        score: h1 - expected_h2,
        h1,
        per_class_h2,
        per_class_weight: weights,
    })
}

/// Scores every unlabeled candidate, in ascending index order.
pub fn score_pool(
    head: &ClassifierHead,
    pool: &FeaturePool,
    weighting: &IGWeighting,
    step_size: f64,
    counters: &WorkCounters,
) -> Result<Vec<IGScoreResult>> {
    if pool.unlabeled().is_empty() {
        return Err(Error::EmptyUnlabeledPool);
    }
    let state = RoundState::prepare(head, pool)?;
    let candidates: Vec<usize> = pool.unlabeled().iter().copied().collect();
    candidates
        .par_iter()
        .map(|&i| score_candidate(head, pool, i, weighting, step_size, &state, counters))
        .collect()
}
