use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading input files.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: file is empty or has no data rows")]
    Empty { path: PathBuf },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: blank value in column `{column}`")]
    BlankValue {
        path: PathBuf,
        row: usize,
        column: String,
    },
    #[error("{path}: row {row}: non-numeric value `{value}` in column `{column}`")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },
    #[error("{path}: row {row}: {message}")]
    Malformed {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("no usable cells in the requested age/year range")]
    NoCells,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the domain of a density or transform.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("fitting failed: {0}")]
    Fit(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Ingest(_) | Error::Io { .. } | Error::Format { .. } => 3,
            Error::Fit(_) => 4,
            Error::Domain(_) | Error::Config(_) | Error::Unsupported(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
