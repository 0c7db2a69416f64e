use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unexpected header {found:?}, expected {expected:?}")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}:{line}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{context}: {message}")]
    Validation { context: String, message: String },

    #[error("duplicate key {key} ({context})")]
    DuplicateKey { context: String, key: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("no deflator for year {year}")]
    MissingDeflator { year: i32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("feature `{feature}` is constant on the training split")]
    ConstantFeature { feature: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: u64, loss: f64 },

    #[error("model file {path}: {message}")]
    CorruptModel { path: PathBuf, message: String },

    #[error("model file {path}: format version {found}, expected {expected}")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("series too short: {len} observations, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("ARIMA fit failed: {0}")]
    FitFailure(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            context: context.into(),
            message: message.into(),
        }
    }

    /// Process exit status for the CLI: 1 for bad inputs, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Header { .. }
            | Error::MalformedRow { .. }
            | Error::Validation { .. }
            | Error::DuplicateKey { .. }
            | Error::Schema(_)
            | Error::MissingDeflator { .. }
            | Error::Config(_)
            | Error::Dimension { .. }
            | Error::ConstantFeature { .. }
            | Error::Empty(_)
            | Error::VersionMismatch { .. }
            | Error::CorruptModel { .. }
            | Error::SeriesTooShort { .. } => 1,
            Error::Io { .. }
            | Error::Diverged { .. }
            | Error::FitFailure(_)
            | Error::Singular(_)
            | Error::Json(_) => 2,
        }
    }
}
