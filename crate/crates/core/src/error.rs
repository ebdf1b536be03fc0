use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("modality mismatch: expected {expected}, got {actual}")]
    Modality {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("ingestion error for {path}: {reason}")]
    Ingestion { path: PathBuf, reason: String },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("empty table: {0}")]
    EmptyTable(String),

    #[error("table format error at line {line}: {reason}")]
    TableFormat { line: usize, reason: String },

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("solver did not converge after {iterations} iterations (relative duality gap {gap:.3e})")]
    Convergence { iterations: usize, gap: f64 },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable identifier, printed by the CLI.
    pub fn id(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "E_INVALID_SPEC",
            Error::InsufficientData(_) => "E_INSUFFICIENT_DATA",
            Error::Modality { .. } => "E_MODALITY",
            Error::Manifest(_) => "E_MANIFEST",
            Error::Ingestion { .. } => "E_INGESTION",
            Error::Calibration(_) => "E_CALIBRATION",
            Error::EmptyTable(_) => "E_EMPTY_TABLE",
            Error::TableFormat { .. } => "E_TABLE_FORMAT",
            Error::DegenerateLabels(_) => "E_DEGENERATE_LABELS",
            Error::Convergence { .. } => "E_CONVERGENCE",
            Error::Divergence(_) => "E_DIVERGENCE",
            Error::Schema(_) => "E_SCHEMA",
            Error::ModelFormat(_) => "E_MODEL_FORMAT",
            Error::Io { .. } => "E_IO",
        }
    }

    /// Errors caused by bad user input rather than a fault in the pipeline.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Divergence(_) | Error::Convergence { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
