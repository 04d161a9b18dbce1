use thiserror::Error;

use crate::genome::GenomeError;
use crate::sim::SimError;
use crate::tasks::TaskError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("fitness evaluation failed: {0}")]
    Fitness(String),
    #[error("{0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
