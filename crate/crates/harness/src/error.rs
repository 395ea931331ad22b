use std::path::PathBuf;

use forage_core::{ScenarioError, WorldError};
use forage_learn::LearnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid matrix: {0}")]
    Matrix(String),
    #[error("unknown controller `{0}`")]
    UnknownController(String),
    #[error("controller `learned` needs a checkpoint")]
    MissingCheckpoint,
    #[error("{path}: {source}")]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error("{path}: {msg}")]
    Records { path: PathBuf, msg: String },
    #[error("no result files under {0}")]
    NoRecords(PathBuf),
    #[error("checkpoint {path}: {source}")]
    Checkpoint { path: PathBuf, source: LearnError },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T, HarnessError>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T, HarnessError> {
        self.map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
