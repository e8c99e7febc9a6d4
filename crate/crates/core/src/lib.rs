//! Multi-task policy distillation for text-based games.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: tensors, a reverse-mode tape, LSTM cell, losses, SGD and the
//!   checkpoint container.
//! - [`env`]: the Home World family of text games and its BFS oracle.
//! - [`agent`]: LSTM-DQN networks, replay memory and the single-game
//!   Q-learning trainer.
//! - [`distill`]: teacher data stores, the multi-headed student, the KL
//!   distillation trainer and the multi-task LSTM-DQN baseline.
//! - [`analysis`]: mean-jacobian heat maps, embedding export and
//!   embedding-transfer initialization.

pub mod agent;
pub mod analysis;
pub mod distill;
pub mod env;
mod error;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
