use thiserror::Error;

use forage_core::WorldError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("input has {got} values, network expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite {what} in episode {episode}")]
    NonFinite { what: String, episode: u64 },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error(transparent)]
    World(#[from] WorldError),
}
