//! Comma-separated dataset files.
//!
//! The header names every column. `label` holds a class index (empty for an
//! unlabeled row), `split` is one of `train`, `valid`, `test`, and every other
//! column is a feature in header order. Row order defines sample indices.

use std::path::Path;

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::io::fmt_f64;

pub const LABEL_COLUMN: &str = "label";
pub const SPLIT_COLUMN: &str = "split";

/// Reads a dataset. With `num_classes` unset, the class count is one more than
/// the largest label present.
pub fn load_dataset(path: &Path, num_classes: Option<usize>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &'static str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_owned(),
            column: name.to_owned(),
        })
    };
    let label_col = find(LABEL_COLUMN)?;
    let split_col = find(SPLIT_COLUMN)?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != label_col && i != split_col).collect();

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse { path: path.to_owned(), line, message };

        let mut features = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let field = &record[c];
            let v: f64 = field
                .parse()
                .map_err(|_| bad(format!("column `{}`: `{field}` is not a number", &headers[c])))?;
            features.push(v);
        }
        let label = match &record[label_col] {
            "" => None,
            field => {
                let y: usize = field
                    .parse()
                    .map_err(|_| bad(format!("column `label`: `{field}` is not a class index")))?;
                if let Some(c) = num_classes {
                    if y >= c {
                        return Err(bad(format!("label {y} is out of range for {c} classes")));
                    }
                }
                Some(y)
            }
        };
        let split: Split = record[split_col].parse().map_err(bad)?;
        rows.push((features, label, split));
    }
    let classes = num_classes.unwrap_or_else(|| {
        rows.iter().filter_map(|(_, y, _)| *y).max().map_or(0, |m| m + 1)
    });
    Dataset::new(feature_cols.len(), classes, rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::io(path, source),
            _ => unreachable!(),
        },
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("expected {expected_len} columns, found {len}"),
        },
        _ => Error::Parse { path: path.to_owned(), line, message: e.to_string() },
    }
}

/// Writes a dataset with feature columns `f0..f{d-1}`, then `label` and `split`.
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<String> = (0..dataset.dim()).map(|j| format!("f{j}")).collect();
    header.push(LABEL_COLUMN.into());
    header.push(SPLIT_COLUMN.into());
    writer.write_record(&header)?;
    for s in dataset.samples() {
        let mut row: Vec<String> = s.features.iter().map(|&v| fmt_f64(v)).collect();
        row.push(s.label.map_or_else(String::new, |y| y.to_string()));
        row.push(dataset.split_of(s.index).as_str().into());
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
