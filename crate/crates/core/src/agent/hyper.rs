use serde::{Deserialize, Serialize};

use crate::Error;

/// Linear ε schedule from `start` to `end` over `anneal_steps` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    /// `None` anneals over half of the training budget.
    pub anneal_steps: Option<u64>,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64, budget: u64) -> f64 {
        let span = self.anneal_steps.unwrap_or(budget / 2).max(1);
        let frac = (step as f64 / span as f64).min(1.0);
        self.start + (self.end - self.start) * frac
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    /// Distillation temperature.
    pub tau: f64,
    pub lr: f64,
    pub clip_norm: f64,
    /// Parameter updates between target-network syncs.
    pub target_sync_interval: u64,
    pub batch_size: usize,
    pub d_emb: usize,
    pub hidden: usize,
    /// Width of the first linear layer.
    pub linear1: usize,
    pub episode_cap: usize,
    pub replay_capacity: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    /// Environment steps per parameter update.
    pub train_every: u64,
    /// Exploration rate of the evaluation policy.
    pub eval_epsilon: f64,
    /// Environment steps (or updates, for distillation) between evaluations.
    pub eval_interval: u64,
    pub eval_episodes: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.1,
                anneal_steps: None,
            },
            tau: 0.01,
            lr: 0.5,
            clip_norm: 5.0,
            target_sync_interval: 500,
            batch_size: 32,
            d_emb: 20,
            hidden: 50,
            linear1: 100,
            episode_cap: 20,
            replay_capacity: 20_000,
            warmup: 500,
            train_every: 1,
            eval_epsilon: 0.05,
            eval_interval: 1_000,
            eval_episodes: 50,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.eval_epsilon) {
            return bad("eval_epsilon must lie in [0, 1]");
        }
        if !(self.tau > 0.0) || !(self.lr > 0.0) || !(self.clip_norm > 0.0) {
            return bad("tau, lr and clip_norm must be positive");
        }
        if self.target_sync_interval == 0
            || self.batch_size == 0
            || self.d_emb == 0
            || self.hidden == 0
            || self.linear1 == 0
            || self.episode_cap == 0
            || self.replay_capacity == 0
            || self.train_every == 0
            || self.eval_interval == 0
            || self.eval_episodes == 0
        {
            return bad("sizes, intervals and counts must be positive");
        }
        if self.replay_capacity < self.batch_size {
            return bad("replay capacity is smaller than the batch size");
        }
        Ok(())
    }
}
