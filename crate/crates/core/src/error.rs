use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, index ranges or set relations that do not line up.
    #[error("structural error: {0}")]
    Structural(String),

    /// A non-finite value appeared during computation.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("malformed {file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },

    #[error("label out of range in {file}:{line}: class {class} with {num_classes} classes")]
    LabelOutOfRange {
        file: String,
        line: usize,
        class: usize,
        num_classes: usize,
    },

    #[error("edge endpoint out of range in {file}:{line}: node {node} with {num_nodes} nodes")]
    EdgeOutOfRange {
        file: String,
        line: usize,
        node: usize,
        num_nodes: usize,
    },

    #[error("count mismatch for {what}: meta.json says {expected}, found {found}")]
    CountMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short category name used for CLI diagnostics.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Structural(_) => "structural",
            Error::Numeric(_) => "numeric",
            Error::MissingFile(_) => "missing-file",
            Error::Malformed { .. } => "malformed-input",
            Error::LabelOutOfRange { .. } => "label-out-of-range",
            Error::EdgeOutOfRange { .. } => "edge-out-of-range",
            Error::CountMismatch { .. } => "count-mismatch",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
