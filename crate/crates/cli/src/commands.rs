use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use infogain::data::FeaturePool;
use infogain::experiment::{aggregate_curve, repetition_seed};
use infogain::io::results::{aggregate_csv, reference_csv, CURVE_FILE, REFERENCE_FILE};
use infogain::io::{generate_synthetic, read_curve, write_dataset, write_results, SyntheticSpec};
use infogain::seed::{self, Stream};
use infogain::strategy::{acquire, AcquisitionRequest};
use infogain::{
    full_data_reference, percent_to_target, run_experiment, Dataset, ExperimentConfig, ExperimentOutcome,
    Split, StrategyKind, TrainConfig,
};
use serde::Serialize;

use crate::table;
use crate::{BenchArgs, CompareArgs, ExperimentArgs, GenerateArgs, ReportArgs, RunArgs};

pub const OUT_DIR_ENV: &str = "INFOGAIN_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "results";

fn stdout_write(bytes: &[u8]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)?;
    out.flush()?;
    Ok(())
}

fn parse_strategies(names: &[String]) -> Result<Vec<StrategyKind>> {
    names
        .iter()
        .map(|n| n.trim().parse::<StrategyKind>().map_err(anyhow::Error::from))
        .collect()
}

/// Loads the config, applies command-line overrides and validates everything
/// that can be checked before any compute.
fn prepare(
    args: &ExperimentArgs,
    adjust: impl FnOnce(&mut ExperimentConfig),
) -> Result<(ExperimentConfig, Arc<Dataset>, PathBuf)> {
    let mut config = ExperimentConfig::from_file(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(r) = args.repetitions {
        config.repetitions = r;
    }
    if let Some(j) = args.rounds {
        config.rounds = j;
    }
    adjust(&mut config);
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| config.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    config.output.dir = Some(out_dir.clone());
    let data = Arc::new(load_checked(&config)?);
    Ok((config, data, out_dir))
}

fn load_checked(config: &ExperimentConfig) -> Result<Dataset> {
    let errors = config.validate();
    if !errors.is_empty() {
        bail!("invalid configuration:\n  {}", errors.join("\n  "));
    }
    let data = config.dataset.load().context("loading dataset")?;
    let errors = config.validate_against(&data);
    if !errors.is_empty() {
        bail!("invalid configuration:\n  {}", errors.join("\n  "));
    }
    Ok(data)
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn check_outcomes(outcomes: &[ExperimentOutcome]) -> Result<()> {
    for o in outcomes {
        for f in &o.failures {
            eprintln!("warning: {} repetition {} failed: {}", o.strategy, f.repetition, f.error);
        }
        ensure!(!o.runs.is_empty(), "every repetition of {} failed", o.strategy);
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassCountSummary {
    split: String,
    counts: Vec<usize>,
}

pub fn generate(args: GenerateArgs, json: bool) -> Result<()> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(name), _) => SyntheticSpec::preset(name, 0)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<SyntheticSpec>(&text)
                .map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e.message().trim()))?
        }
        (None, None) => bail!("pass --preset or --spec"),
    };
    if let Some(seed) = args.seed {
        spec.rng_seed = seed;
    }
    let errors = spec.validate();
    if !errors.is_empty() {
        bail!("invalid synthetic spec:\n  {}", errors.join("\n  "));
    }
    let data = generate_synthetic(&spec)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_dataset(&data, &args.out)?;
    let counts: Vec<ClassCountSummary> = Split::ALL
        .iter()
        .map(|&s| ClassCountSummary { split: s.to_string(), counts: data.class_counts(s) })
        .collect();
    if json {
        stdout_write(serde_json::to_string_pretty(&counts)?.as_bytes())?;
        stdout_write(b"\n")
    } else {
        let rows: Vec<(String, Vec<usize>)> = counts.into_iter().map(|c| (c.split, c.counts)).collect();
        stdout_write(table::class_counts(&rows).as_bytes())
    }
}

#[derive(Serialize)]
struct RunSummary<'a> {
    strategy: StrategyKind,
    aggregate: &'a infogain::Aggregate,
    failures: &'a [infogain::experiment::RepetitionFailure],
    /// Mean wall-clock scoring seconds per acquisition round, over repetitions.
    mean_scoring_seconds: Vec<f64>,
    work_per_candidate: Vec<f64>,
}

fn summary(o: &ExperimentOutcome) -> RunSummary<'_> {
    let rounds = o.runs.iter().map(|r| r.rounds.len()).max().unwrap_or(0);
    let mean_over = |f: &dyn Fn(&infogain::experiment::RoundRecord) -> f64| -> Vec<f64> {
        (1..rounds)
            .map(|j| {
                let v: Vec<f64> = o.runs.iter().filter_map(|r| r.rounds.get(j)).map(f).collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            })
            .collect()
    };
    RunSummary {
        strategy: o.strategy,
        aggregate: &o.aggregate,
        failures: &o.failures,
        mean_scoring_seconds: mean_over(&|r| r.scoring_seconds),
        work_per_candidate: mean_over(&|r| r.work.per_candidate()),
    }
}

pub fn run(args: RunArgs, json: bool) -> Result<()> {
    let strategy = args.strategy.as_deref().map(str::parse::<StrategyKind>).transpose()?;
    let (config, data, out_dir) = prepare(&args.experiment, |c| {
        if let Some(k) = strategy {
            c.strategy = Some(k);
            c.strategies.clear();
        }
    })?;
    let strategies = config.strategy_list();
    ensure!(
        strategies.len() == 1,
        "`run` takes a single strategy, the config lists {}; use `compare`",
        strategies.len()
    );
    let outcome = run_experiment(&config, &data, strategies[0])?;
    check_outcomes(std::slice::from_ref(&outcome))?;
    write_results(&out_dir, &config, std::slice::from_ref(&outcome))?;
    if json {
        write_json(&out_dir, "summary.json", &summary(&outcome))?;
    }
    stdout_write(table::aggregate_table(&outcome.aggregate.rows).as_bytes())?;
    eprintln!("results written to {}", out_dir.display());
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    all: f64,
    all_95: f64,
    runs: Vec<RunSummary<'a>>,
    percent_to_all_95: Vec<(StrategyKind, Option<f64>)>,
}

pub fn compare(args: CompareArgs, json: bool) -> Result<()> {
    let overrides = parse_strategies(&args.strategies)?;
    let (config, data, out_dir) = prepare(&args.experiment, |c| {
        if !overrides.is_empty() {
            c.strategy = None;
            c.strategies = overrides;
        }
    })?;
    let strategies = config.strategy_list();
    ensure!(!strategies.is_empty(), "no strategies to compare");

    let mut outcomes = Vec::with_capacity(strategies.len());
    for &k in &strategies {
        let started = Instant::now();
        outcomes.push(run_experiment(&config, &data, k)?);
        log::info!("{k} finished in {:.1}s", started.elapsed().as_secs_f64());
    }
    check_outcomes(&outcomes)?;
    let reference = full_data_reference(&config, &data)?;
    write_results(&out_dir, &config, &outcomes)?;
    let path = out_dir.join(REFERENCE_FILE);
    std::fs::write(&path, reference_csv(&reference)).with_context(|| format!("writing {}", path.display()))?;

    let threshold = reference.threshold();
    let reached: Vec<(StrategyKind, Option<f64>)> = outcomes
        .iter()
        .map(|o| (o.strategy, percent_to_target(&o.aggregate.test_curve(), threshold, true)))
        .collect();

    let mut text = table::comparison_table(&outcomes);
    text.push('\n');
    for o in &outcomes {
        text.push_str(&table::acquisition_table(o));
        text.push('\n');
    }
    text.push_str(&table::reference_lines(reference.mean, threshold, &reached));
    stdout_write(text.as_bytes())?;

    if json {
        let summary = CompareSummary {
            all: reference.mean,
            all_95: threshold,
            runs: outcomes.iter().map(summary).collect(),
            percent_to_all_95: reached,
        };
        write_json(&out_dir, "summary.json", &summary)?;
    }
    eprintln!("results written to {}", out_dir.display());
    Ok(())
}

#[derive(Serialize)]
pub struct BenchRow {
    pub strategy: StrategyKind,
    pub candidates: usize,
    pub ms_per_candidate: f64,
    pub forwards_per_candidate: f64,
    pub gradient_steps_per_candidate: f64,
    pub eval_forwards_per_candidate: f64,
    pub distance_evals_per_candidate: f64,
}

pub fn bench(args: BenchArgs, json: bool) -> Result<()> {
    let mut strategies = parse_strategies(&args.strategies)?;
    if strategies.is_empty() {
        strategies = StrategyKind::ALL.to_vec();
    }
    let (config, data, out_dir) = prepare(&args.experiment, |c| {
        if c.strategy_list().is_empty() {
            c.strategy = Some(StrategyKind::Random);
        }
    })?;
    let rep_seed = repetition_seed(config.base_seed, 0);
    let pool = FeaturePool::initialize(Arc::clone(&data), config.seed_fraction, rep_seed)?;
    let train_config = TrainConfig {
        rng_seed: seed::derive(rep_seed, &[Stream::Training as u64, 0, config.train.rng_seed]),
        ..config.train
    };
    let head = infogain::classifier::train(&pool, &config.model, &train_config)?;

    let mut rows = Vec::with_capacity(strategies.len());
    for k in strategies {
        let request = AcquisitionRequest {
            head: &head,
            pool: &pool,
            budget: config.batch_size,
            step_size: config.step_size(),
            mc_samples: config.mc_samples,
            round_seed: seed::derive(rep_seed, &[Stream::Acquisition as u64, 1]),
        };
        let started = Instant::now();
        let acquisition = acquire(k, &request)?;
        let elapsed = started.elapsed().as_secs_f64();
        let w = acquisition.work;
        let n = w.candidates.max(1) as f64;
        rows.push(BenchRow {
            strategy: k,
            candidates: w.candidates as usize,
            ms_per_candidate: elapsed * 1e3 / n,
            forwards_per_candidate: w.forwards as f64 / n,
            gradient_steps_per_candidate: w.gradient_steps as f64 / n,
            eval_forwards_per_candidate: w.eval_forwards as f64 / n,
            distance_evals_per_candidate: w.distance_evals as f64 / n,
        });
    }
    stdout_write(table::bench_table(&rows).as_bytes())?;
    if json {
        std::fs::create_dir_all(&out_dir)?;
        write_json(&out_dir, "bench.json", &rows)?;
    }
    Ok(())
}

pub fn report(args: ReportArgs, json: bool) -> Result<()> {
    let mut all = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    for dir in &args.dirs {
        let path = dir.join(CURVE_FILE);
        let rows = read_curve(&path).with_context(|| format!("reading {}", path.display()))?;
        let mut names_here: Vec<String> = Vec::new();
        for r in &rows {
            if !names_here.contains(&r.strategy) {
                names_here.push(r.strategy.clone());
            }
        }
        let renamed: Vec<(String, String)> = names_here
            .into_iter()
            .map(|name| {
                let mut label = name.clone();
                let mut k = 1;
                while seen.contains(&label) {
                    k += 1;
                    label = format!("{name}#{k}");
                }
                seen.push(label.clone());
                (name, label)
            })
            .collect();
        all.extend(rows.into_iter().map(|mut r| {
            r.strategy = renamed.iter().find(|(n, _)| *n == r.strategy).map(|(_, l)| l.clone()).unwrap();
            r
        }));
    }
    let rows = aggregate_curve(&all);
    if json {
        stdout_write(serde_json::to_string_pretty(&rows)?.as_bytes())?;
        stdout_write(b"\n")
    } else {
        stdout_write(&aggregate_csv(&rows))
    }
}
