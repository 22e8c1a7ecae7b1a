use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("duplicate id {id} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("invalid tool spec `{tool}`: {message}")]
    InvalidTool { tool: String, message: String },

    #[error("unknown tool kind for `{tool}`: kind {kind} does not match its parameters")]
    UnknownToolKind { tool: String, kind: String },

    #[error("need at least {needed} tools, got {got}")]
    TooFewTools { needed: usize, got: usize },

    #[error("unknown tool `{0}`")]
    UnknownTool(String),

    #[error("chunk size {chunk_size} exceeds number of documents {n_docs}")]
    ChunkTooLarge { chunk_size: usize, n_docs: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("feature subset size {0} outside [1, 15]")]
    FeatureSubsetSize(usize),

    #[error("dataset too small: {0}")]
    DatasetTooSmall(String),

    #[error("class `{class}` has support {support}, need at least 3 to split")]
    ClassTooSmall { class: String, support: usize },

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("svm did not converge after {iterations} iterations (violation {tolerance:.3e})")]
    NonConvergence { iterations: usize, tolerance: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unsupported model version {0}")]
    ModelVersion(u32),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
