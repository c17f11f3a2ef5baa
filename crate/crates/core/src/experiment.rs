//! The acquisition loop: train, score, select, reveal labels, repeat.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{train, ClassifierHead, TrainConfig};
use crate::config::ExperimentConfig;
use crate::data::{AcquisitionRecord, Dataset, FeaturePool};
use crate::error::{Error, Result};
use crate::ig::IGScoreResult;
use crate::metrics::head_macro_auc;
use crate::seed::{self, Stream};
use crate::strategy::{acquire, AcquisitionRequest, ScoreVector, StrategyKind};
use crate::work::WorkCounts;

/// One evaluation point of a repetition. Round 0 is the seed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub labeled_count: usize,
    pub labeled_fraction: f64,
    pub test_auc: f64,
    pub valid_auc: f64,
    /// The acquisition that led to this round; absent for round 0.
    pub acquisition: Option<AcquisitionRecord>,
    pub scoring_seconds: f64,
    pub scored_candidates: usize,
    pub work: WorkCounts,
}

/// Scores behind one acquisition, kept only when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundScores {
    pub round: usize,
    pub scores: Option<ScoreVector>,
    pub ig_results: Option<Vec<IGScoreResult>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub strategy: StrategyKind,
    pub repetition: usize,
    pub seed: u64,
    pub train_size: usize,
    pub rounds: Vec<RoundRecord>,
    pub score_dumps: Vec<RoundScores>,
    pub final_head: Option<ClassifierHead>,
}

impl RunRecord {
    pub fn curve_rows(&self) -> Vec<CurveRow> {
        self.rounds
            .iter()
            .map(|r| CurveRow {
                strategy: self.strategy.name().to_owned(),
                repetition: self.repetition,
                seed: self.seed,
                round: r.round,
                labeled_count: r.labeled_count,
                labeled_percent: labeled_percent(r.labeled_count, self.train_size),
                test_auc: r.test_auc,
                valid_auc: r.valid_auc,
                scored_candidates: r.scored_candidates,
            })
            .collect()
    }
}

/// `100 · count / train_size`, exact whenever the quotient is representable.
pub fn labeled_percent(count: usize, train_size: usize) -> f64 {
    (count * 100) as f64 / train_size as f64
}

/// One line of the curve file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub strategy: String,
    pub repetition: usize,
    pub seed: u64,
    pub round: usize,
    pub labeled_count: usize,
    pub labeled_percent: f64,
    pub test_auc: f64,
    pub valid_auc: f64,
    pub scored_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub strategy: String,
    pub round: usize,
    pub labeled_count: usize,
    pub labeled_percent: f64,
    pub repetitions: usize,
    pub test_auc_mean: f64,
    pub test_auc_std: f64,
    pub valid_auc_mean: f64,
    pub valid_auc_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-(strategy, round) mean and population standard deviation, in order of
/// first appearance.
pub fn aggregate_curve(rows: &[CurveRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(&str, usize)> = Vec::new();
    for r in rows {
        let key = (r.strategy.as_str(), r.round);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(strategy, round)| {
            let group: Vec<&CurveRow> = rows
                .iter()
                .filter(|r| r.strategy == strategy && r.round == round)
                .collect();
            let test: Vec<f64> = group.iter().map(|r| r.test_auc).collect();
            let valid: Vec<f64> = group.iter().map(|r| r.valid_auc).collect();
            let (test_auc_mean, test_auc_std) = mean_std(&test);
            let (valid_auc_mean, valid_auc_std) = mean_std(&valid);
            AggregateRow {
                strategy: strategy.to_owned(),
                round,
                labeled_count: group[0].labeled_count,
                labeled_percent: group[0].labeled_percent,
                repetitions: group.len(),
                test_auc_mean,
                test_auc_std,
                valid_auc_mean,
                valid_auc_std,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub rows: Vec<AggregateRow>,
    /// Mean cumulative acquisitions per class, indexed by round then class.
    pub mean_cumulative_per_class: Vec<Vec<f64>>,
}

impl Aggregate {
    pub fn from_runs(runs: &[RunRecord]) -> Self {
        let curve: Vec<CurveRow> = runs.iter().flat_map(RunRecord::curve_rows).collect();
        let rounds = runs.iter().map(|r| r.rounds.len()).max().unwrap_or(0);
        let classes = runs
            .iter()
            .flat_map(|r| &r.rounds)
            .find_map(|r| r.acquisition.as_ref())
            .map_or(0, |a| a.per_class_counts.len());
        let mean_cumulative_per_class = (0..rounds)
            .map(|j| {
                let mut sums = vec![0.0; classes];
                for run in runs {
                    if let Some(a) = run.rounds.get(j).and_then(|r| r.acquisition.as_ref()) {
                        sums.iter_mut()
                            .zip(&a.cumulative_per_class_counts)
                            .for_each(|(s, &c)| *s += c as f64);
                    }
                }
                sums.into_iter().map(|s| s / runs.len() as f64).collect()
            })
            .collect();
        Self {
            rows: aggregate_curve(&curve),
            mean_cumulative_per_class,
        }
    }

    /// `(labeled %, mean test AUC)` per round.
    pub fn test_curve(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.labeled_percent, r.test_auc_mean)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionFailure {
    pub repetition: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub strategy: StrategyKind,
    /// Completed repetitions, in repetition order.
    pub runs: Vec<RunRecord>,
    /// Repetitions aborted by an error; excluded from `aggregate`.
    pub failures: Vec<RepetitionFailure>,
    pub aggregate: Aggregate,
}

/// Seed of repetition `r`.
pub fn repetition_seed(base_seed: u64, repetition: usize) -> u64 {
    base_seed.wrapping_add(repetition as u64)
}

/// The training seed depends on repetition and round only, so every strategy
/// starts from the same round-0 model.
fn round_train_config(config: &ExperimentConfig, rep_seed: u64, round: usize) -> TrainConfig {
    TrainConfig {
        rng_seed: seed::derive(
            rep_seed,
            &[Stream::Training as u64, round as u64, config.train.rng_seed],
        ),
        ..config.train
    }
}

fn evaluate(head: &ClassifierHead, pool: &FeaturePool) -> Result<(f64, f64)> {
    let test = head_macro_auc(head, &pool.test_examples()?)?.macro_auc;
    let valid = head_macro_auc(head, &pool.eval_examples()?)?.macro_auc;
    Ok((test, valid))
}

/// Runs one repetition to completion.
pub fn run_repetition(
    config: &ExperimentConfig,
    data: &Arc<Dataset>,
    strategy: StrategyKind,
    repetition: usize,
) -> Result<RunRecord> {
    let rep_seed = repetition_seed(config.base_seed, repetition);
    let mut pool = FeaturePool::initialize(Arc::clone(data), config.seed_fraction, rep_seed)?;
    let initial_labeled = pool.labeled().len();
    let initial_unlabeled = pool.unlabeled().len();

    let mut head = train(&pool, &config.model, &round_train_config(config, rep_seed, 0))?;
    let (test_auc, valid_auc) = evaluate(&head, &pool)?;
    let mut rounds = vec![RoundRecord {
        round: 0,
        labeled_count: initial_labeled,
        labeled_fraction: pool.labeled_fraction(),
        test_auc,
        valid_auc,
        acquisition: None,
        scoring_seconds: 0.0,
        scored_candidates: 0,
        work: WorkCounts::default(),
    }];
    let mut score_dumps = Vec::new();

    for j in 1..config.rounds {
        let request = AcquisitionRequest {
            head: &head,
            pool: &pool,
            budget: config.batch_size,
            step_size: config.step_size(),
            mc_samples: config.mc_samples,
            round_seed: seed::derive(rep_seed, &[Stream::Acquisition as u64, j as u64]),
        };
        let started = Instant::now();
        let acquisition = acquire(strategy, &request)?;
        let scoring_seconds = started.elapsed().as_secs_f64();
        let scored_candidates = pool.unlabeled().len();
        let record = pool.apply_acquisition(&acquisition.selected)?;

        assert_eq!(pool.labeled().len(), initial_labeled + j * config.batch_size);
        assert_eq!(pool.unlabeled().len(), initial_unlabeled - j * config.batch_size);

        head = train(&pool, &config.model, &round_train_config(config, rep_seed, j))?;
        let (test_auc, valid_auc) = evaluate(&head, &pool)?;
        log::info!(
            "{strategy} rep {repetition} round {j}: {:.2}% labeled, test AUC {test_auc:.4}",
            labeled_percent(pool.labeled().len(), pool.train_size())
        );
        if config.output.dump_scores {
            score_dumps.push(RoundScores {
                round: j,
                scores: acquisition.scores,
                ig_results: acquisition.ig_results,
            });
        }
        rounds.push(RoundRecord {
            round: j,
            labeled_count: pool.labeled().len(),
            labeled_fraction: pool.labeled_fraction(),
            test_auc,
            valid_auc,
            acquisition: Some(record),
            scoring_seconds,
            scored_candidates,
            work: acquisition.work,
        });
    }
    Ok(RunRecord {
        strategy,
        repetition,
        seed: rep_seed,
        train_size: pool.train_size(),
        rounds,
        score_dumps,
        final_head: config.output.save_models.then_some(head),
    })
}

/// Runs every repetition of one strategy. Repetitions run in parallel; a
/// failing repetition is reported in `failures` and the others continue.
pub fn run_experiment(
    config: &ExperimentConfig,
    data: &Arc<Dataset>,
    strategy: StrategyKind,
) -> Result<ExperimentOutcome> {
    let mut errors = config.validate();
    errors.extend(config.validate_against(data));
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let results: Vec<Result<RunRecord>> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| run_repetition(config, data, strategy, r))
        .collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (repetition, result) in results.into_iter().enumerate() {
        match result {
            Ok(run) => runs.push(run),
            Err(e) => {
                log::warn!("{strategy} repetition {repetition} failed: {e}");
                failures.push(RepetitionFailure {
                    repetition,
                    seed: repetition_seed(config.base_seed, repetition),
                    error: e.to_string(),
                });
            }
        }
    }
    let aggregate = Aggregate::from_runs(&runs);
    Ok(ExperimentOutcome {
        strategy,
        runs,
        failures,
        aggregate,
    })
}

/// Smallest labeled percentage whose mean AUC reaches `target`, or `None`.
/// With `interpolate`, the crossing between adjacent rounds is located linearly.
pub fn percent_to_target(curve: &[(f64, f64)], target: f64, interpolate: bool) -> Option<f64> {
    if !target.is_finite() {
        return None;
    }
    let i = curve.iter().position(|&(_, auc)| auc >= target)?;
    if i == 0 || !interpolate {
        return Some(curve[i].0);
    }
    let ((f0, a0), (f1, a1)) = (curve[i - 1], curve[i]);
    Some(f0 + (target - a0) / (a1 - a0) * (f1 - f0))
}

/// Test AUC with the whole training split labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullDataReference {
    pub per_repetition: Vec<f64>,
    pub mean: f64,
}

impl FullDataReference {
    /// The 95 % label-efficiency threshold.
    pub fn threshold(&self) -> f64 {
        0.95 * self.mean
    }
}

pub fn full_data_reference(config: &ExperimentConfig, data: &Arc<Dataset>) -> Result<FullDataReference> {
    let per_repetition = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let rep_seed = repetition_seed(config.base_seed, r);
            let pool = FeaturePool::fully_labeled(Arc::clone(data))?;
            let train_config = TrainConfig {
                rng_seed: seed::derive(rep_seed, &[Stream::FullReference as u64, config.train.rng_seed]),
                ..config.train
            };
            let head = train(&pool, &config.model, &train_config)?;
            Ok(head_macro_auc(&head, &pool.test_examples()?)?.macro_auc)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = per_repetition.iter().sum::<f64>() / per_repetition.len() as f64;
    Ok(FullDataReference { per_repetition, mean })
}
