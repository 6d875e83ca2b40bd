use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("duplicate entity id {0}")]
    DuplicateId(String),
    #[error("non-finite value at row {row}, dim {dim}")]
    NonFinite { row: usize, dim: usize },
    #[error("unmatched entity {0}")]
    UnmatchedEntity(String),
    #[error("missing value for feature {feature} at row {row}")]
    MissingCell { feature: String, row: usize },
    #[error("binning needs at least {bins} values, got {values}")]
    TooFewValues { bins: usize, values: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("unsupported tree schema version {found} (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("node {0} is not a leaf")]
    NotALeaf(usize),
    #[error("leaf {leaf} has {count} entities, diagnosis needs at least {required}")]
    LeafTooSmall { leaf: usize, count: usize, required: usize },
    #[error("missing feature {0}")]
    MissingFeature(String),
    #[error("feature {feature}: {message}")]
    InvalidFeatureValue { feature: String, message: String },
    #[error("tree fingerprint {tree} does not match data fingerprint {data}")]
    FingerprintMismatch { tree: String, data: String },
}

impl Error {
    /// True for failures reading or writing the filesystem.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Open { .. } | Error::Io(_))
    }
}
