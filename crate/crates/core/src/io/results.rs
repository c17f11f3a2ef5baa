//! Result files of an experiment directory.
//!
//! | file | one row per |
//! |------|-------------|
//! | `curve.csv` | strategy, repetition, round |
//! | `aggregate.csv` | strategy, round |
//! | `acquisitions.csv` | strategy, repetition, acquisition round, class |
//! | `config.toml` | (the resolved configuration) |
//! | `failures.csv` | aborted repetition (only written when there is one) |
//!
//! Wall-clock timings are not written, so repeated runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::classifier::write_checkpoint;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::{labeled_percent, AggregateRow, CurveRow, ExperimentOutcome, FullDataReference, RoundScores};
use crate::io::fmt_f64;

pub const CURVE_FILE: &str = "curve.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const ACQUISITIONS_FILE: &str = "acquisitions.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const FAILURES_FILE: &str = "failures.csv";
pub const REFERENCE_FILE: &str = "reference.csv";

pub const CURVE_COLUMNS: [&str; 9] = [
    "strategy",
    "repetition",
    "seed",
    "round",
    "labeled_count",
    "labeled_percent",
    "test_auc",
    "valid_auc",
    "scored_candidates",
];

pub const AGGREGATE_COLUMNS: [&str; 9] = [
    "strategy",
    "round",
    "labeled_count",
    "labeled_percent",
    "repetitions",
    "test_auc_mean",
    "test_auc_std",
    "valid_auc_mean",
    "valid_auc_std",
];

pub const ACQUISITION_COLUMNS: [&str; 7] = [
    "strategy",
    "repetition",
    "round",
    "labeled_percent",
    "class",
    "count",
    "cumulative_count",
];

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn curve_csv(rows: &[CurveRow]) -> Vec<u8> {
    to_csv(
        &CURVE_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.strategy.clone(),
                r.repetition.to_string(),
                r.seed.to_string(),
                r.round.to_string(),
                r.labeled_count.to_string(),
                fmt_f64(r.labeled_percent),
                fmt_f64(r.test_auc),
                fmt_f64(r.valid_auc),
                r.scored_candidates.to_string(),
            ]
        }),
    )
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Vec<u8> {
    to_csv(
        &AGGREGATE_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.strategy.clone(),
                r.round.to_string(),
                r.labeled_count.to_string(),
                fmt_f64(r.labeled_percent),
                r.repetitions.to_string(),
                fmt_f64(r.test_auc_mean),
                fmt_f64(r.test_auc_std),
                fmt_f64(r.valid_auc_mean),
                fmt_f64(r.valid_auc_std),
            ]
        }),
    )
}

pub fn acquisitions_csv(outcomes: &[ExperimentOutcome]) -> Vec<u8> {
    let mut rows = Vec::new();
    for o in outcomes {
        for run in &o.runs {
            for r in &run.rounds {
                let Some(a) = &r.acquisition else { continue };
                for (class, (n, cum)) in a.per_class_counts.iter().zip(&a.cumulative_per_class_counts).enumerate() {
                    rows.push(vec![
                        o.strategy.name().to_owned(),
                        run.repetition.to_string(),
                        r.round.to_string(),
                        fmt_f64(labeled_percent(r.labeled_count, run.train_size)),
                        class.to_string(),
                        n.to_string(),
                        cum.to_string(),
                    ]);
                }
            }
        }
    }
    to_csv(&ACQUISITION_COLUMNS, rows)
}

pub fn reference_csv(reference: &FullDataReference) -> Vec<u8> {
    to_csv(
        &["line", "test_auc"],
        [
            vec!["all".to_owned(), fmt_f64(reference.mean)],
            vec!["all-95%".to_owned(), fmt_f64(reference.threshold())],
        ],
    )
}

fn scores_csv(dump: &RoundScores) -> Option<Vec<u8>> {
    if let Some(ig) = &dump.ig_results {
        let classes = ig.first().map_or(0, |r| r.per_class_h2.len());
        let mut header = vec!["index".to_owned(), "score".to_owned(), "h1".to_owned()];
        header.extend((0..classes).map(|c| format!("h2_{c}")));
        header.extend((0..classes).map(|c| format!("weight_{c}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        return Some(to_csv(
            &header,
            ig.iter().map(|r| {
                let mut row = vec![r.candidate_index.to_string(), fmt_f64(r.score), fmt_f64(r.h1)];
                row.extend(r.per_class_h2.iter().map(|&v| fmt_f64(v)));
                row.extend(r.per_class_weight.iter().map(|&v| fmt_f64(v)));
                row
            }),
        ));
    }
    dump.scores.as_ref().map(|s| {
        to_csv(
            &["index", "score"],
            s.entries.iter().map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]),
        )
    })
}

/// Writes every result file for `outcomes` into `dir`, creating it if needed.
/// Returns the paths written.
pub fn write_results(dir: &Path, config: &ExperimentConfig, outcomes: &[ExperimentOutcome]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, bytes)?;
        written.push(path);
        Ok(())
    };

    let curve: Vec<CurveRow> = outcomes.iter().flat_map(|o| o.runs.iter().flat_map(|r| r.curve_rows())).collect();
    let aggregate: Vec<AggregateRow> = outcomes.iter().flat_map(|o| o.aggregate.rows.iter().cloned()).collect();
    put(CURVE_FILE, &curve_csv(&curve))?;
    put(AGGREGATE_FILE, &aggregate_csv(&aggregate))?;
    put(ACQUISITIONS_FILE, &acquisitions_csv(outcomes))?;
    put(CONFIG_FILE, config.to_toml_string().as_bytes())?;

    let failures: Vec<Vec<String>> = outcomes
        .iter()
        .flat_map(|o| {
            o.failures.iter().map(|f| {
                vec![o.strategy.name().to_owned(), f.repetition.to_string(), f.seed.to_string(), f.error.clone()]
            })
        })
        .collect();
    let failures_path = dir.join(FAILURES_FILE);
    if failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path).map_err(|e| Error::io(&failures_path, e))?;
        }
    } else {
        put(FAILURES_FILE, &to_csv(&["strategy", "repetition", "seed", "error"], failures))?;
    }

    for o in outcomes {
        for run in &o.runs {
            if !run.score_dumps.is_empty() {
                let sub = dir.join("scores");
                fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
                for dump in &run.score_dumps {
                    if let Some(bytes) = scores_csv(dump) {
                        let path = sub.join(format!("{}_rep{}_round{}.csv", o.strategy, run.repetition, dump.round));
                        write_file(&path, &bytes)?;
                        written.push(path);
                    }
                }
            }
            if let Some(head) = &run.final_head {
                let sub = dir.join("models");
                fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
                let path = sub.join(format!("{}_rep{}.head", o.strategy, run.repetition));
                write_checkpoint(head, &path)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Reads a curve file back, checking that every column is present.
pub fn read_curve(path: &Path) -> Result<Vec<CurveRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse { path: path.to_owned(), line: 0, message: format!("{other:?}") },
    })?;
    let headers = reader.headers()?.clone();
    let mut cols = [0usize; 9];
    for (slot, name) in cols.iter_mut().zip(CURVE_COLUMNS) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_owned(),
            column: name.to_owned(),
        })?;
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| record.get(cols[k]).unwrap_or("");
        macro_rules! parse {
            ($k:expr) => {
                field($k).parse().map_err(|_| Error::Parse {
                    path: path.to_owned(),
                    line,
                    message: format!("column `{}`: cannot parse `{}`", CURVE_COLUMNS[$k], field($k)),
                })?
            };
        }
        rows.push(CurveRow {
            strategy: field(0).to_owned(),
            repetition: parse!(1),
            seed: parse!(2),
            round: parse!(3),
            labeled_count: parse!(4),
            labeled_percent: parse!(5),
            test_auc: parse!(6),
            valid_auc: parse!(7),
            scored_candidates: parse!(8),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::aggregate_curve;

    fn rows() -> Vec<CurveRow> {
        (0..2)
            .flat_map(|rep| {
                (0..3).map(move |round| CurveRow {
                    strategy: "aeig".into(),
                    repetition: rep,
                    seed: rep as u64,
                    round,
                    labeled_count: 10 + 5 * round,
                    labeled_percent: (10 + 5 * round) as f64 / 3.0,
                    test_auc: 0.7 + 0.01 * round as f64 + 0.001 * rep as f64 + 1.0 / 7.0e5,
                    valid_auc: 0.6 + 1.0 / 3.0e3,
                    scored_candidates: 90 - 5 * round,
                })
            })
            .collect()
    }

    #[test]
    fn curve_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(CURVE_FILE);
        write_file(&path, &curve_csv(&rows())).unwrap();
        assert_eq!(read_curve(&path).unwrap(), rows());
        assert_eq!(aggregate_csv(&aggregate_curve(&read_curve(&path).unwrap())), aggregate_csv(&aggregate_curve(&rows())));
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(CURVE_FILE);
        fs::write(&path, "strategy,repetition,seed,round,labeled_count,labeled_percent,valid_auc,scored_candidates\n").unwrap();
        let err = read_curve(&path).unwrap_err().to_string();
        assert!(err.contains("test_auc"), "{err}");
    }
}
