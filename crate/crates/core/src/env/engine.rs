use rand::Rng as _;

use super::{Command, EnvError, GameSpec};
use crate::rng::{self, Rng, Stream};

#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub room: usize,
    pub quest: usize,
    pub steps_taken: usize,
    rng: Rng,
}

impl EnvState {
    /// Everything except the text generator.
    pub fn key(&self) -> (usize, usize, usize) {
        (self.room, self.quest, self.steps_taken)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub text: String,
    pub game_id: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub quest_completed: bool,
}

impl GameSpec {
    /// Start an episode in a uniformly random room with a uniformly random quest.
    pub fn reset(&self, seed: u64) -> (EnvState, Observation) {
        let mut rng = rng::stream(seed, Stream::Env);
        let room = rng.gen_range(0..self.rooms.len());
        let quest = rng.gen_range(0..self.quests.len());
        self.start(room, quest, rng)
    }

    /// Start an episode at a chosen `(room, quest)`.
    pub fn reset_to(&self, room: usize, quest: usize, seed: u64) -> (EnvState, Observation) {
        self.start(room, quest, rng::stream(seed, Stream::Env))
    }

    fn start(&self, room: usize, quest: usize, rng: Rng) -> (EnvState, Observation) {
        let mut state = EnvState {
            room,
            quest,
            steps_taken: 0,
            rng,
        };
        let obs = self.observe(&mut state);
        (state, obs)
    }

    fn observe(&self, state: &mut EnvState) -> Observation {
        let descs = &self.descriptions[state.room];
        let d = &descs[state.rng.gen_range(0..descs.len())];
        let texts = &self.quests[state.quest].texts;
        let q = &texts[state.rng.gen_range(0..texts.len())];
        Observation {
            text: format!("{d} {q}"),
            game_id: self.game_id.clone(),
        }
    }

    /// Apply one command.
    pub fn step(&self, state: &EnvState, cmd: Command) -> Result<(EnvState, StepResult), EnvError> {
        if cmd.action >= self.actions.len() || cmd.object >= self.objects.len() {
            return Err(EnvError::InvalidCommand {
                action: cmd.action,
                object: cmd.object,
            });
        }
        let cap = self.rewards.episode_cap;
        if state.steps_taken >= cap {
            return Err(EnvError::EpisodeOver(state.steps_taken));
        }
        let mut next = state.clone();
        next.steps_taken += 1;
        let quest = &self.quests[state.quest];
        let mut completed = false;
        if Some(cmd.action) == self.move_action() {
            if let Some(to) = self.exit(state.room, cmd.object) {
                next.room = to;
            }
        } else if state.room == quest.room && cmd.action == quest.action && cmd.object == quest.object {
            completed = true;
        }
        let mut reward = self.rewards.step_penalty;
        if completed {
            reward += self.rewards.completion_reward;
        }
        let observation = self.observe(&mut next);
        let done = completed || next.steps_taken >= cap;
        Ok((
            next,
            StepResult {
                observation,
                reward,
                done,
                quest_completed: completed,
            },
        ))
    }
}
