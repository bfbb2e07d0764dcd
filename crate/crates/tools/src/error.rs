use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error at byte offset {offset}: {what}")]
    Parse {
        path: PathBuf,
        offset: usize,
        what: String,
    },

    #[error("{path}: bad magic number {got:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        got: u32,
        expected: u32,
    },

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] sfc_core::Error),
}

pub type Result<T> = std::result::Result<T, ToolError>;

impl ToolError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> ToolError {
        let path = path.into();
        move |source| ToolError::Io { path, source }
    }
}
