use std::path::PathBuf;

use thiserror::Error;

/// Errors of the file layer and the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: checksum mismatch (expected {expected}, found {found})")]
    Checksum { path: PathBuf, expected: String, found: String },
    #[error("{path}: unsupported schema version {found} (this build reads {supported})")]
    Version { path: PathBuf, found: u32, supported: u32 },
    #[error("{path}: truncated payload (expected {expected} bytes, found {found})")]
    Truncated { path: PathBuf, expected: u64, found: u64 },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("config hash mismatch: checkpoint was produced from dataset {expected}, got {found} (use --force to override)")]
    HashMismatch { expected: String, found: String },
    #[error(transparent)]
    Core(#[from] geochart_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }

    /// Process exit code: 1 usage, 2 data error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use geochart_core::Error as C;
        match self {
            Error::Usage(_) => 1,
            Error::Core(C::Numerical(_) | C::NoValidTriplet | C::DegenerateLabels | C::SingularGeometry) => 3,
            _ => 2,
        }
    }
}
