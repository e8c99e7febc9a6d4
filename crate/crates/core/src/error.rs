use thiserror::Error;

use crate::env::EnvError;
use crate::nn::{CheckpointError, NnError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("replay buffer holds {have} transitions, batch needs {need}")]
    InsufficientBuffer { have: usize, need: usize },
    #[error("unknown game id {0:?}")]
    UnknownGame(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty observation")]
    EmptyObservation,
    #[error("no samples stored for game {0:?}")]
    EmptyStore(String),
    #[error("corrupt teacher store: {0}")]
    Store(String),
    #[error("not allowed: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
