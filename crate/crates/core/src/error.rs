use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty model")]
    EmptyModel,

    #[error("non-finite value in tensor {tensor}")]
    NonFinite { tensor: String },

    #[error(
        "dimension chain broken at layer {layer}: previous out_dim {expected}, in_dim {actual}"
    )]
    DimensionChain {
        layer: usize,
        expected: usize,
        actual: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("parameter length mismatch: expected N={expected}, got N={actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("feature width {actual} does not match model input dim {expected}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate parameter range: min == max == {0}")]
    DegenerateRange(f64),

    #[error("bin count k={0} is invalid (need k >= 2)")]
    InvalidBinCount(usize),

    #[error("need at least 2 parameters, got {0}")]
    TooFewParameters(usize),

    #[error("bin index {index} out of range for codebook with d={d}")]
    IndexOutOfRange { index: usize, d: usize },

    #[error("bins {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("cardinality sum {actual} does not match N={expected}")]
    CardinalityMismatch { expected: u64, actual: u64 },

    #[error("table has {table} codes but {cardinalities} cardinalities were given")]
    TableMismatch { table: usize, cardinalities: usize },

    #[error("truncated bitstream: {0}")]
    TruncatedStream(String),

    #[error("no code matches bit pattern at bit offset {0}")]
    UnknownCode(u64),

    #[error("code length {0} exceeds the supported maximum of 64 bits")]
    CodeTooLong(usize),

    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("missing artifact from stage `{stage}`: {}", path.display())]
    MissingArtifact { stage: &'static str, path: PathBuf },

    #[error("pipeline invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
