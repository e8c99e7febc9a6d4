//! The Home World family of text games.
//!
//! Transitions between rooms are deterministic; only the wording of each
//! observation is random. A quest is completed by issuing its
//! `(action, object)` command inside its target room.

mod bundled;
mod document;
mod engine;
mod oracle;
mod vocab;

use thiserror::Error;

pub use bundled::{bundled_game, bundled_game_text, BUNDLED_GAMES};
pub use document::{parse_game_spec, ExitDocument, GameDocument, KeyOrder, QuestDocument};
pub use engine::{EnvState, Observation, StepResult};
pub use oracle::{optimal_average_return, optimal_command, optimal_steps, shortest_distances};
pub use vocab::{tokenize, Vocabulary};

/// The action word that moves the player through an exit.
pub const MOVE_ACTION: &str = "go";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid game spec at {path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("word {0:?} is not in the game vocabulary")]
    UnknownWord(String),
    #[error("command ({action}, {object}) is outside the command space")]
    InvalidCommand { action: usize, object: usize },
    #[error("episode already finished after {0} steps")]
    EpisodeOver(usize),
    #[error("quest {quest:?} cannot be reached from room {room:?}")]
    Unreachable { room: String, quest: String },
    #[error("unknown bundled game {0:?}")]
    UnknownGame(String),
}

/// Reward and episode-length constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardConfig {
    pub completion_reward: f64,
    pub step_penalty: f64,
    pub episode_cap: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            completion_reward: 1.0,
            step_penalty: -0.01,
            episode_cap: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exit {
    pub from: usize,
    /// Index into [`GameSpec::objects`].
    pub direction: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuestSpec {
    pub id: String,
    pub texts: Vec<String>,
    pub room: usize,
    /// Index into [`GameSpec::actions`].
    pub action: usize,
    /// Index into [`GameSpec::objects`].
    pub object: usize,
}

/// A validated game. Rooms, actions and objects are referred to by index.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    pub game_id: String,
    pub rooms: Vec<String>,
    pub exits: Vec<Exit>,
    /// Object index located in each room.
    pub room_objects: Vec<usize>,
    pub descriptions: Vec<Vec<String>>,
    pub quests: Vec<QuestSpec>,
    pub actions: Vec<String>,
    /// Object words, including the direction words usable with `go`.
    pub objects: Vec<String>,
    /// Every word in descriptions, quests and commands.
    pub vocab: Vocabulary,
    pub rewards: RewardConfig,
}

/// An `(action, object)` pair, both as indices into the game's word lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Command {
    pub action: usize,
    pub object: usize,
}

impl Command {
    pub fn new(action: usize, object: usize) -> Self {
        Self { action, object }
    }
}

impl GameSpec {
    /// Cross product of action and object words, action-major.
    pub fn command_space(&self) -> Vec<Command> {
        (0..self.actions.len())
            .flat_map(|a| (0..self.objects.len()).map(move |o| Command::new(a, o)))
            .collect()
    }

    pub fn command(&self, action: &str, object: &str) -> Result<Command, EnvError> {
        let a = self
            .actions
            .iter()
            .position(|w| w == action)
            .ok_or_else(|| EnvError::UnknownWord(action.to_owned()))?;
        let o = self
            .objects
            .iter()
            .position(|w| w == object)
            .ok_or_else(|| EnvError::UnknownWord(object.to_owned()))?;
        Ok(Command::new(a, o))
    }

    pub fn command_text(&self, cmd: Command) -> String {
        format!("{} {}", self.actions[cmd.action], self.objects[cmd.object])
    }

    pub fn room_index(&self, name: &str) -> Option<usize> {
        self.rooms.iter().position(|r| r == name)
    }

    pub fn quest_index(&self, id: &str) -> Option<usize> {
        self.quests.iter().position(|q| q.id == id)
    }

    pub fn move_action(&self) -> Option<usize> {
        self.actions.iter().position(|a| a == MOVE_ACTION)
    }

    /// Room reached by `go <direction>` from `room`, if that exit exists.
    pub fn exit(&self, room: usize, direction: usize) -> Option<usize> {
        self.exits
            .iter()
            .find(|e| e.from == room && e.direction == direction)
            .map(|e| e.to)
    }

    pub fn start_states(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rooms.len()).flat_map(move |r| (0..self.quests.len()).map(move |q| (r, q)))
    }

    /// Tokenize `text` into indices of this game's vocabulary.
    pub fn encode(&self, text: &str) -> Result<Vec<u32>, EnvError> {
        self.vocab.encode(text)
    }
}

#[cfg(test)]
mod tests;
