use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("cannot read {path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Numerical(#[from] hdlin_core::Error),
    #[error("cell {cell}: replication {replication} (seed {seed:#018x}) failed: {source}")]
    Replication {
        cell: String,
        replication: u64,
        seed: u64,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("baseline '{name}': {message}")]
    Baseline { name: String, message: String },
    #[error("oracle verification failed")]
    OracleFailed,
}

impl HarnessError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code: 1 usage/IO/config, 2 numerical failure, 3 oracle failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numerical(_) => 2,
            HarnessError::Replication { source, .. } => source.exit_code(),
            HarnessError::OracleFailed => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
