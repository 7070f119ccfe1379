use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix has a negative entry {value} at ({row}, {col})")]
    Negative { row: usize, col: usize, value: f64 },

    #[error("invalid matrix shape {rows}x{cols}")]
    Shape { rows: usize, cols: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("negative radicand in multiplicative update at ({row}, {col})")]
    NegativeRadicand { row: usize, col: usize },

    #[error("{path}: line {line}: malformed number {token:?}")]
    MalformedNumber {
        path: PathBuf,
        line: usize,
        token: String,
    },

    #[error("{path}: line {line} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: file name does not follow NMF_<KIND>_data_<R|G|H>_n=<n>_k=<k>_id=<id>.txt")]
    FileName { path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: companion factors do not reproduce R (max deviation {deviation:e})")]
    Inconsistent { path: PathBuf, deviation: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("csv {path}: line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
