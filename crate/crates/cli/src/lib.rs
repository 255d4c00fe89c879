//! IO, configuration, and the experiment harness around `pos2fs-core`.
//!
//! The binary front end lives in `main.rs`; everything here is a library so
//! integration tests can drive the same code paths.

pub mod config;
pub mod csv;
pub mod harness;
pub mod report;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Csv {
        path: PathBuf,
        /// 1-based line number in the file.
        line: usize,
        message: String,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("dataset '{name}': {message}")]
    Dataset { name: String, message: String },
    #[error("cell {cell}: {message}")]
    Cell { cell: String, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
