use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DvsError>;

#[derive(Debug, Error)]
pub enum DvsError {
    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("times must be strictly increasing (line {line})")]
    Order { line: u64 },

    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("split of {count} windows at fraction {fraction} leaves an empty side")]
    DegenerateSplit { count: usize, fraction: f64 },

    #[error("need at least 2 values, got {0}")]
    Length(usize),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("tape does not match layer stack: {0}")]
    TapeMismatch(String),

    #[error("k = {k} exceeds window length {len}")]
    KTooLarge { k: usize, len: usize },

    #[error("linear system is singular even with ridge regularization")]
    SingularSystem,

    #[error("random-walk similarity mass is zero")]
    DegenerateWalk,

    #[error("length mismatch: {preds} predictions vs {actuals} actuals")]
    LengthMismatch { preds: usize, actuals: usize },

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("unknown method: {0}")]
    UnknownMethod(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl DvsError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DvsError::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(DvsError::NonFinite(format!("{what} at index {i}"))),
        None => Ok(()),
    }
}
