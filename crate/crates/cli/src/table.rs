//! Plain-text tables for the console.

use std::fmt::Write;

use infogain::experiment::AggregateRow;
use infogain::{ExperimentOutcome, StrategyKind};

use crate::commands::BenchRow;

fn pm(mean: f64, std: f64) -> String {
    format!("{mean:.4} ± {std:.4}")
}

pub fn class_counts(rows: &[(String, Vec<usize>)]) -> String {
    let classes = rows.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    let mut out = format!("{:<6}", "split");
    for c in 0..classes {
        write!(out, " {:>8}", format!("class {c}")).unwrap();
    }
    writeln!(out, " {:>8}", "total").unwrap();
    for (split, counts) in rows {
        write!(out, "{split:<6}").unwrap();
        for n in counts {
            write!(out, " {n:>8}").unwrap();
        }
        writeln!(out, " {:>8}", counts.iter().sum::<usize>()).unwrap();
    }
    out
}

pub fn aggregate_table(rows: &[AggregateRow]) -> String {
    let mut out = format!(
        "{:<12} {:>5} {:>9} {:>17} {:>17}\n",
        "strategy", "round", "labeled%", "test AUC", "valid AUC"
    );
    for r in rows {
        writeln!(
            out,
            "{:<12} {:>5} {:>9.2} {:>17} {:>17}",
            r.strategy,
            r.round,
            r.labeled_percent,
            pm(r.test_auc_mean, r.test_auc_std),
            pm(r.valid_auc_mean, r.valid_auc_std)
        )
        .unwrap();
    }
    out
}

/// Test AUC per round, one column per strategy.
pub fn comparison_table(outcomes: &[ExperimentOutcome]) -> String {
    let mut out = format!("{:>9}", "labeled%");
    for o in outcomes {
        write!(out, " {:>17}", o.strategy.name()).unwrap();
    }
    out.push('\n');
    let rounds = outcomes.iter().map(|o| o.aggregate.rows.len()).max().unwrap_or(0);
    for j in 0..rounds {
        let pct = outcomes
            .iter()
            .find_map(|o| o.aggregate.rows.get(j))
            .map_or(f64::NAN, |r| r.labeled_percent);
        write!(out, "{pct:>9.2}").unwrap();
        for o in outcomes {
            let cell = o
                .aggregate
                .rows
                .get(j)
                .map_or_else(|| "-".to_owned(), |r| pm(r.test_auc_mean, r.test_auc_std));
            write!(out, " {cell:>17}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Mean cumulative acquisitions per class after each acquisition round.
pub fn acquisition_table(outcome: &ExperimentOutcome) -> String {
    let mut out = format!("{}: mean cumulative acquisitions per class\n", outcome.strategy);
    let per_round = &outcome.aggregate.mean_cumulative_per_class;
    let classes = per_round.iter().map(Vec::len).max().unwrap_or(0);
    write!(out, "{:>9}", "labeled%").unwrap();
    for c in 0..classes {
        write!(out, " {:>9}", format!("class {c}")).unwrap();
    }
    out.push('\n');
    for (row, counts) in outcome.aggregate.rows.iter().zip(per_round).skip(1) {
        write!(out, "{:>9.2}", row.labeled_percent).unwrap();
        for n in counts {
            write!(out, " {n:>9.1}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn reference_lines(all: f64, threshold: f64, reached: &[(StrategyKind, Option<f64>)]) -> String {
    let mut out = format!("all      {all:.4}\nall-95%  {threshold:.4}\n");
    for (k, pct) in reached {
        match pct {
            Some(p) => writeln!(out, "{:<12} reaches all-95% at {p:.2}% labeled", k.name()).unwrap(),
            None => writeln!(out, "{:<12} does not reach all-95%", k.name()).unwrap(),
        }
    }
    out
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<12} {:>10} {:>10} {:>10} {:>10} {:>12} {:>10}\n",
        "strategy", "candidates", "ms/cand", "forwards", "grad_steps", "eval_fwds", "distances"
    );
    for r in rows {
        writeln!(
            out,
            "{:<12} {:>10} {:>10.4} {:>10.1} {:>10.1} {:>12.1} {:>10.1}",
            r.strategy.name(),
            r.candidates,
            r.ms_per_candidate,
            r.forwards_per_candidate,
            r.gradient_steps_per_candidate,
            r.eval_forwards_per_candidate,
            r.distance_evals_per_candidate
        )
        .unwrap();
    }
    out
}
