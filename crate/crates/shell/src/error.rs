use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShellError {
    #[error(transparent)]
    Core(#[from] covshift_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Validation(String),
}

impl ShellError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ShellError::Io { path: path.to_path_buf(), source }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        ShellError::Config(msg.into())
    }

    /// Process exit code: 2 for configuration or validation problems, 3 for
    /// numeric failures, 4 for I/O and file-format failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ShellError::Core(e) if e.is_numeric() => 3,
            ShellError::Core(_) | ShellError::Config(_) | ShellError::Validation(_) => 2,
            ShellError::Io { .. } | ShellError::Parse { .. } | ShellError::Format { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, ShellError>;
