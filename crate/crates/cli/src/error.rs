use std::fmt;
use std::path::Path;

/// A failed command with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed input files, inconsistent inputs: exit 1.
    User(String),
    /// Unreadable or unwritable paths: exit 2.
    Io(String),
    /// A numerical procedure failed: exit 3.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::User(_) => 1,
            Self::Io(_) => 2,
            Self::Numeric(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::User(m) => write!(f, "error: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
            Self::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<rkcca::Error> for CliError {
    fn from(e: rkcca::Error) -> Self {
        match e {
            rkcca::Error::Numeric(_) | rkcca::Error::Degenerate(_) => Self::Numeric(e.to_string()),
            _ => Self::User(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
