use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid value for config key `{key}`: {message}")]
    ConfigKey { key: String, message: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] CheckpointError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Failures specific to the binary tensor container.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 8], found: Vec<u8> },

    #[error("unsupported format version {found} (this build reads version {supported})")]
    Version { found: u32, supported: u32 },

    #[error("truncated container: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },

    #[error("tensor `{name}`: manifest shape {manifest:?} disagrees with expected {expected:?}")]
    ShapeMismatch {
        name: String,
        manifest: Vec<usize>,
        expected: Vec<usize>,
    },

    #[error("tensor `{name}` missing from manifest")]
    MissingTensor { name: String },

    #[error("tensor `{name}`: bad extent (offset {offset}, len {len}, payload {payload})")]
    BadExtent {
        name: String,
        offset: usize,
        len: usize,
        payload: usize,
    },

    #[error("tensor `{name}`: {message}")]
    InvalidValue { name: String, message: String },

    #[error("container kind `{found}` where `{expected}` was expected")]
    Kind { expected: String, found: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn key(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigKey {
            key: key.into(),
            message: message.into(),
        }
    }
}
