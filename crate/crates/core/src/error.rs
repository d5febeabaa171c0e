use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate capacity: every dimension must be positive")]
    DegenerateCapacity,

    #[error("invalid water-fill input: {0}")]
    InvalidWaterFill(String),

    #[error("oracle limit exceeded: {tasks} tasks on {nodes} nodes (max 12 tasks, 4 nodes)")]
    OracleLimitExceeded { tasks: usize, nodes: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid task {task_id}: {reason}")]
    InvalidTask { task_id: u64, reason: String },

    #[error("invalid workload: {0}")]
    InvalidWorkload(String),

    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {source}", file.display())]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(file: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
