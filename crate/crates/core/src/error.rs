use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("I/O error on {path}: {source}")]
    IoPath { path: PathBuf, source: io::Error },

    /// Input does not follow the expected file layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("account {0:?} has posts but no status entry")]
    MissingStatus(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty vocabulary: no word reaches min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("training diverged at update {step}: {reason}")]
    Diverged { step: u64, reason: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("degenerate alignment: {0}")]
    DegenerateAlignment(String),

    #[error("refinement failed at iteration {iteration}: {source}")]
    Refinement { iteration: usize, source: Box<Error> },

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },

    #[error("configuration error(s):\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("missing artifact(s) from an earlier stage: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingArtifacts(Vec<PathBuf>),
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io_path(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::IoPath {
            path: path.into(),
            source,
        }
    }
}
