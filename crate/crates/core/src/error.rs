use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the active-learning engine.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training split is empty")]
    EmptyTrainSplit,

    #[error("seed fraction {0} is outside (0, 1)")]
    InvalidSeedFraction(f64),

    #[error("sample {index} has {got} features, dataset dimension is {expected}")]
    FeatureLength {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("label {label} is out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("sample {0} is not in the unlabeled pool")]
    NotUnlabeled(usize),

    #[error("sample {0} selected more than once")]
    DuplicateIndex(usize),

    #[error("sample {0} has no ground-truth label to reveal")]
    MissingOracleLabel(usize),

    #[error("evaluation set is empty")]
    EmptyEvalSet,

    #[error("evaluation sample {0} has no label")]
    UnlabeledEvalSample(usize),

    #[error("labeled set is empty")]
    EmptyLabeledSet,

    #[error("unlabeled pool is empty")]
    EmptyUnlabeledPool,

    #[error("non-finite training loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("non-finite gradient")]
    NonFiniteGradient,

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dropout-active prediction requires a random stream")]
    MissingRng,

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("{0} weighting requires evaluation class frequencies")]
    MissingFrequencies(&'static str),

    #[error("budget {budget} exceeds the {available} available candidates")]
    BudgetExceedsPool { budget: usize, available: usize },

    #[error("non-finite score for candidate {0}")]
    NonFiniteScore(usize),

    #[error("acquisition rounds are not consecutive: expected round {expected}, found {found}")]
    RoundGap { expected: usize, found: usize },

    #[error("no class has both positive and negative examples; AUC is undefined")]
    UndefinedAuc,

    #[error("score matrix has {rows} rows but {labels} labels")]
    ScoreShape { rows: usize, labels: usize },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
