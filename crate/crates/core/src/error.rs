use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Channel layout of a dataset does not match the robot or model it is used with.
    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: file not found", path.display())]
    MissingInput { path: PathBuf },

    #[error("unsupported model format version {found} (this build reads version {expected})")]
    FormatVersion { found: u32, expected: u32 },

    /// A metric is undefined for the given series (zero range, zero variance).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput { path }
        } else {
            Error::Io { path, source }
        }
    }

    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Schema(_) => "schema",
            Error::Parse { .. } => "input-parse",
            Error::MissingInput { .. } => "input-missing",
            Error::FormatVersion { .. } => "format-version",
            Error::UndefinedMetric(_) => "undefined-metric",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::Schema(_)
            | Error::Parse { .. }
            | Error::MissingInput { .. }
            | Error::FormatVersion { .. }
            | Error::Io { .. } => 3,
            Error::UndefinedMetric(_) | Error::Numerical(_) => 4,
        }
    }
}
