use std::path::{Path, PathBuf};

/// Process exit status for input and usage problems.
pub const EXIT_USAGE: i32 = 2;
/// Process exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {location}: {message}", path.display())]
    Invalid {
        path: PathBuf,
        location: String,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] netflow_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(path: &Path, location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.to_path_buf(),
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) if is_numerical(e) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}

fn is_numerical(e: &netflow_core::Error) -> bool {
    use netflow_core::Error as E;
    match e {
        E::Singular { .. } | E::Inaccurate { .. } | E::InvalidCoefficient { .. } => true,
        E::StepFailed { source, .. } => is_numerical(source),
        _ => false,
    }
}
