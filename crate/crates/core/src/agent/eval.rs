use rand::Rng as _;

use super::{epsilon_greedy, QNet, TokenMap};
use crate::env::{optimal_command, Command, EnvState, GameSpec, Observation};
use crate::nn::Real;
use crate::rng::{substream, Rng, Stream};
use crate::Error;

/// Anything that picks a command each step.
pub trait Policy {
    fn act(&mut self, spec: &GameSpec, state: &EnvState, obs: &Observation) -> Result<Command, Error>;
}

/// ε-greedy over a network controller.
pub struct NetPolicy<'a, T> {
    pub net: &'a QNet<T>,
    pub head: usize,
    pub tokens: &'a TokenMap,
    pub epsilon: f64,
    pub rng: Rng,
}

impl<T: Real> Policy for NetPolicy<'_, T> {
    fn act(&mut self, spec: &GameSpec, _state: &EnvState, obs: &Observation) -> Result<Command, Error> {
        let h = &self.net.heads()[self.head];
        let ids = self.tokens.encode(spec, &obs.text)?;
        let (net, head) = (self.net, self.head);
        epsilon_greedy(h.n_actions, h.n_objects, self.epsilon, &mut self.rng, || {
            net.q_values(&ids, head)
        })
    }
}

/// Shortest-path policy reading the true room and quest.
pub struct OptimalPolicy;

impl Policy for OptimalPolicy {
    fn act(&mut self, spec: &GameSpec, state: &EnvState, _obs: &Observation) -> Result<Command, Error> {
        Ok(optimal_command(spec, state.room, state.quest)?)
    }
}

/// Always issues the same command.
pub struct FixedPolicy(pub Command);

impl Policy for FixedPolicy {
    fn act(&mut self, _: &GameSpec, _: &EnvState, _: &Observation) -> Result<Command, Error> {
        Ok(self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalResult {
    pub avg_reward: f64,
    pub quest_completion: f64,
    pub episodes: usize,
}

/// Play one episode to completion or the step cap; returns `(return, completed)`.
pub fn run_episode<P: Policy + ?Sized>(
    policy: &mut P,
    spec: &GameSpec,
    mut state: EnvState,
    mut obs: Observation,
) -> Result<(f64, bool), Error> {
    let mut ret = 0.0;
    loop {
        let cmd = policy.act(spec, &state, &obs)?;
        let (next, r) = spec.step(&state, cmd)?;
        ret += r.reward;
        if r.done {
            return Ok((ret, r.quest_completed));
        }
        state = next;
        obs = r.observation;
    }
}

fn summarize(results: &[(f64, bool)]) -> EvalResult {
    let n = results.len();
    EvalResult {
        avg_reward: results.iter().map(|r| r.0).sum::<f64>() / n as f64,
        quest_completion: results.iter().filter(|r| r.1).count() as f64 / n as f64,
        episodes: n,
    }
}

/// Average return and completion fraction over `episodes` random starts.
pub fn evaluate_policy<P: Policy + ?Sized>(
    policy: &mut P,
    spec: &GameSpec,
    episodes: usize,
    seed: u64,
) -> Result<EvalResult, Error> {
    if episodes == 0 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    let mut starts = substream(seed, Stream::Eval, 0);
    let results = (0..episodes)
        .map(|_| {
            let (s, o) = spec.reset(starts.gen());
            run_episode(policy, spec, s, o)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(&results))
}

/// One episode from every `(room, quest)` start.
pub fn evaluate_all_starts<P: Policy + ?Sized>(policy: &mut P, spec: &GameSpec, seed: u64) -> Result<EvalResult, Error> {
    let results = spec
        .start_states()
        .enumerate()
        .map(|(i, (room, quest))| {
            let (s, o) = spec.reset_to(room, quest, seed.wrapping_add(i as u64));
            run_episode(policy, spec, s, o)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(&results))
}

/// Evaluate a network controller with ε-greedy play.
pub fn evaluate<T: Real>(
    net: &QNet<T>,
    head: usize,
    tokens: &TokenMap,
    spec: &GameSpec,
    episodes: usize,
    seed: u64,
    epsilon: f64,
) -> Result<EvalResult, Error> {
    let mut policy = NetPolicy {
        net,
        head,
        tokens,
        epsilon,
        rng: substream(seed, Stream::Eval, 1),
    };
    evaluate_policy(&mut policy, spec, episodes, seed)
}
