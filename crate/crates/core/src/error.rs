use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("misaligned lengths: {what} ({left} vs {right})")]
    Misaligned {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("temperature {0} outside (0, 1]")]
    Temperature(f64),

    #[error("sampler initialization failed after {0} attempts: log target not finite")]
    Initialization(usize),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged {
        epoch: usize,
        reason: String,
        loss_trace: Vec<f64>,
    },

    #[error("quadrature did not converge within {0} grid points per axis")]
    QuadratureNonConvergence(usize),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("no ground-truth oracle for problem {0}")]
    NoOracle(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
