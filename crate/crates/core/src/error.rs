//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("non-monotonic timestamp at record {index}: {t} < {prev}")]
    NonMonotonicTimestamp { index: usize, t: u64, prev: u64 },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("requested k={requested} exceeds retained rank; achievable k is {achievable}")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("empty class {object_id}:{pose_bin} in evaluation set")]
    EmptyClass { object_id: u32, pose_bin: u32 },

    #[error("vote decision requested on empty vote state")]
    EmptyVoteState,

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, used as the CLI exit code basis.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } | Error::NonMonotonicTimestamp { .. } => "parse",
            Error::DimensionMismatch { .. } => "dimension",
            Error::RankDeficient { .. } => "rank",
            Error::NonFinite(_) => "numeric",
            Error::EmptyClass { .. } | Error::EmptyVoteState => "data",
            Error::ModelFormat(_) => "model",
            Error::Config(_) => "config",
            Error::Manifest(_) => "manifest",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Nonzero process exit code per category.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "parse" => 2,
            "dimension" => 3,
            "rank" => 4,
            "numeric" => 5,
            "data" => 6,
            "model" => 7,
            "config" => 8,
            "manifest" => 9,
            _ => 10,
        }
    }
}
