use std::fmt;
use std::io;
use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// A file could not be read or written.
    Io { path: PathBuf, source: io::Error },
    /// A document could not be parsed.
    Parse { path: PathBuf, detail: String },
    /// An input failed semantic validation (bad PMF, allocation, weights, ...).
    Invalid(String),
    /// A computation produced or received a non-finite / out-of-range value.
    Numeric(String),
    /// A coded-equation system contradicted itself; this indicates a protocol
    /// bug, not bad user input.
    Integrity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            detail: detail.into(),
        }
    }

    /// Exit code a command-line front end should use for this error:
    /// 2 for usage/input problems, 1 for computational failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::Invalid(_) => 2,
            Error::Numeric(_) | Error::Integrity(_) => 1,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path, source } => write!(f, "{}: {}", path.display(), source),
            Error::Parse { path, detail } => write!(f, "{}: {}", path.display(), detail),
            Error::Invalid(msg) => write!(f, "invalid input: {}", msg),
            Error::Numeric(msg) => write!(f, "numeric failure: {}", msg),
            Error::Integrity(msg) => write!(f, "protocol integrity failure: {}", msg),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
