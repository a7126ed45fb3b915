use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("invalid geometry in feature {feature}: {reason}")]
    Geometry { feature: usize, reason: String },

    #[error("duplicate community id {0:?}")]
    DuplicateCommunity(String),

    #[error("missing mandatory column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("header does not match class schema: {}", .0.join("; "))]
    SchemaMismatch(Vec<String>),

    #[error("missing population entries for: {}", .0.join(", "))]
    MissingPopulation(Vec<String>),

    #[error("feature count mismatch: model expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("feature importance is not defined for {0} models")]
    UnsupportedModel(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("STREETVIEW_API_KEY is not set")]
    MissingApiKey,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}, row {row}: {message}")]
    Row {
        context: String,
        row: usize,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
