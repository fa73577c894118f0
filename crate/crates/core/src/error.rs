use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors produced by pipeline stages.
///
/// [`Error::is_usage`] separates mistakes in inputs or configuration from
/// environment failures, so callers (the CLI in particular) can map them to
/// distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Bad configuration: a missing column mapping, an unknown feature name,
    /// an invalid hyperparameter grid, and the like.
    #[error("configuration error: {0}")]
    Config(String),

    /// A malformed line in one of the text formats (lexicon files, embedding
    /// files, sentence tables).
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Input data that violates an operation's contract: duplicate ids,
    /// labels outside {0,1}, mismatched annotator id sets, dimension
    /// mismatches.
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by what the user supplied (inputs, flags,
    /// config) rather than by the environment. The CLI exits 1 for usage
    /// errors and 2 otherwise.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Format { .. } | Error::Invalid(_) | Error::Csv(_)
        )
    }
}
