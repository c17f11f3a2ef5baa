//! Reading and writing datasets, synthetic data, and experiment results.

mod dataset;
pub mod results;
mod synthetic;

pub use dataset::{load_dataset, write_dataset, LABEL_COLUMN, SPLIT_COLUMN};
pub use results::{read_curve, write_results};
pub use synthetic::{generate_synthetic, scale_counts, SyntheticSpec, PRESETS};

/// Formats a float with 17 significant digits so that parsing it back is exact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
