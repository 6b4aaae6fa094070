//! Crate-wide error types.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised at the adapter boundary (transport, schema, cassette).
#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("transport failure for task `{task}`: {message}")]
    Transport { task: String, message: String },

    #[error("response for task `{task}` failed schema validation after retry: {message}")]
    Schema { task: String, message: String },

    #[error("payload is missing placeholder `{name}` required by task `{task}`")]
    MissingPlaceholder { task: String, name: String },

    #[error("unknown task id `{0}`")]
    UnknownTask(String),

    #[error("replay miss for key `{key}` (task `{task}`)")]
    ReplayMiss { task: String, key: String },

    #[error("cassette store is corrupt: {0}")]
    CassetteCorrupt(String),

    #[error("response for task `{task}` was truncated beyond repair")]
    Truncated { task: String },

    #[error("embedding request failed: {0}")]
    Embedding(String),
}

/// Top-level error for graph construction, judgment, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("ambiguous document structure at `{path}`: {message}")]
    Ambiguity { path: String, message: String },

    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("relation `{relation}` references missing entity `{entity}`")]
    DanglingRelation { relation: String, entity: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("scenario record {index}: {message}")]
    Scenario { index: usize, message: String },

    #[error(transparent)]
    Adapter(#[from] AdapterError),

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
