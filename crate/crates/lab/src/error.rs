use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failure of a command, classified by the exit code it maps to.
#[derive(Debug, Error)]
pub enum LabError {
    /// A config or input file is malformed or fails validation.
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    /// The inputs parsed but the computation rejected them.
    #[error("{0}")]
    Core(#[from] pnr_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// The fit stopped before converging. Its report was still written.
    #[error("fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
}

impl LabError {
    pub fn input(path: &Path, message: impl Into<String>) -> Self {
        LabError::Input {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input, 3 for I/O failure, 4 for non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Input { .. } | LabError::Core(_) => 2,
            LabError::Io { .. } => 3,
            LabError::NotConverged { .. } => 4,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
