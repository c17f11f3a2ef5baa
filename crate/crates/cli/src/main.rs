use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod table;

/// Pool-based active learning experiments with information-gain acquisition.
#[derive(Parser, Debug)]
#[command(name = "infogain", version, about)]
struct Cli {
    /// Worker threads for repetitions and candidate scoring (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Also write a JSON summary into the output directory.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset file.
    Generate(GenerateArgs),
    /// Run one strategy and write its result files.
    Run(RunArgs),
    /// Run several strategies on shared seeds and compare them.
    Compare(CompareArgs),
    /// Time one scoring pass per strategy and report work counters.
    Bench(BenchArgs),
    /// Re-aggregate the curve files of one or more result directories.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Built-in preset (dr-like or isic-like).
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    preset: Option<String>,
    /// TOML file with a synthetic dataset spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Generator seed; overrides the spec's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Destination CSV file.
    #[arg(long, short)]
    out: PathBuf,
}

/// Options shared by commands that read an experiment config.
#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Output directory; overrides `output.dir` and $INFOGAIN_OUT_DIR.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `repetitions`.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Overrides `rounds`.
    #[arg(long)]
    rounds: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Strategy name; overrides the config.
    #[arg(long)]
    strategy: Option<String>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated strategy names; overrides the config.
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<String>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated strategy names (default: every strategy).
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Result directories containing curve.csv.
    #[arg(required = true)]
    dirs: Vec<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Generate(args) => commands::generate(args, cli.json),
        Command::Run(args) => commands::run(args, cli.json),
        Command::Compare(args) => commands::compare(args, cli.json),
        Command::Bench(args) => commands::bench(args, cli.json),
        Command::Report(args) => commands::report(args, cli.json),
    }
}
