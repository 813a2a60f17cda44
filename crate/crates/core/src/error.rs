//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has no labels")]
    UnlabeledDataset,

    #[error("label column {0:?} not found in header")]
    LabelColumnNotFound(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scenario is inconsistent with the dataset: {0}")]
    ScenarioMismatch(String),

    #[error("k-means requires k <= distinct points ({k} > {distinct})")]
    TooFewDistinctPoints { k: usize, distinct: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty member set")]
    EmptyMembers,

    #[error("instance lies outside the ball (distance {distance} > radius {radius})")]
    OutsideBall { distance: f64, radius: f64 },

    #[error("cannot test the last remaining feature")]
    LastFeature,

    #[error("feature {0} is not in the working subset")]
    NotInWorkingSet(usize),

    #[error("knowledge base has no balls")]
    EmptyKnowledgeBase,

    #[error("knowledge base format version {found} is unsupported (expected {expected})")]
    KbVersionMismatch { expected: u32, found: u32 },

    #[error("malformed knowledge base file: {0}")]
    KbMalformed(String),
}

impl Error {
    /// Groups variants by the CLI exit-code contract: data errors vs
    /// knowledge-base format errors vs configuration/usage errors.
    pub fn is_kb_format(&self) -> bool {
        matches!(
            self,
            Error::KbVersionMismatch { .. } | Error::KbMalformed(_)
        )
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}
