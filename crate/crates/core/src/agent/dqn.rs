//! Q-learning with replay memory and a periodically synced target network.

use std::collections::HashMap;

use rand::Rng as _;

use super::{
    best_pair_value, epsilon_greedy, evaluate, td_target, HyperParams, LogRow, NetDims, QNet, ReplayBuffer,
    TokenInterner, TokenMap, TrainingLog, Transition,
};
use crate::env::GameSpec;
use crate::nn::{sgd_update, Real, Tape};
use crate::rng::{self, substream, Stream};
use crate::Error;

/// Frozen copy of a Q-network (θ⁻). Caches best-pair values per observation
/// between syncs, since its outputs cannot change until the next sync.
#[derive(Clone, Debug)]
pub struct TargetNet<T> {
    net: QNet<T>,
    cache: HashMap<(usize, Vec<u32>), T>,
}

impl<T: Real> TargetNet<T> {
    pub fn new(net: &QNet<T>) -> Self {
        Self {
            net: net.clone(),
            cache: HashMap::new(),
        }
    }

    pub fn net(&self) -> &QNet<T> {
        &self.net
    }

    /// Deep-copy every parameter from `online`.
    pub fn sync(&mut self, online: &QNet<T>) -> Result<(), Error> {
        self.net.params.copy_values_from(&online.params)?;
        self.cache.clear();
        Ok(())
    }

    /// `max_{a,o} (Q(a) + Q(o)) / 2` for each sequence.
    pub fn best_values(&mut self, head: usize, seqs: &[&[u32]]) -> Result<Vec<T>, Error> {
        let mut missing: Vec<&[u32]> = Vec::new();
        for s in seqs {
            let key = (head, s.to_vec());
            if !self.cache.contains_key(&key) && !missing.contains(s) {
                missing.push(s);
            }
        }
        if !missing.is_empty() {
            let (qa, qo) = self.net.q_values_batch(&missing, head)?;
            for (i, s) in missing.iter().enumerate() {
                self.cache.insert((head, s.to_vec()), best_pair_value(qa.row(i), qo.row(i)));
            }
        }
        Ok(seqs.iter().map(|s| self.cache[&(head, s.to_vec())]).collect())
    }
}

/// One minibatch update of controller `head` from `buffer`.
///
/// Loss is the batch mean of `(y − Q(s,a))² + (y − Q(s,o))²` with
/// `y = r + γ max Q(s′; θ⁻)`. Returns the loss before the update.
pub fn train_step<T: Real>(
    net: &mut QNet<T>,
    target: &mut TargetNet<T>,
    buffer: &ReplayBuffer,
    hp: &HyperParams,
    head: usize,
    rng: &mut rng::Rng,
) -> Result<f64, Error> {
    if buffer.len() < hp.batch_size {
        return Err(Error::InsufficientBuffer {
            have: buffer.len(),
            need: hp.batch_size,
        });
    }
    let batch = buffer.sample(hp.batch_size, rng);
    let live: Vec<&[u32]> = batch
        .iter()
        .filter(|t| !t.done)
        .map(|t| &*t.next_state)
        .collect();
    let mut next_values = target.best_values(head, &live)?.into_iter();
    let targets: Vec<T> = batch
        .iter()
        .map(|t| {
            let next = if t.done {
                0.0
            } else {
                next_values.next().expect("one value per live transition").as_f64()
            };
            T::from_f64(td_target(t.reward, t.done, next, hp.gamma))
        })
        .collect();

    let states: Vec<&[u32]> = batch.iter().map(|t| &*t.state).collect();
    let mut tape = Tape::new();
    let f = net.forward(&mut tape, &states, head)?;
    let scale = T::one() / T::from_f64(batch.len() as f64);
    let action_picks: Vec<_> = batch
        .iter()
        .zip(&targets)
        .enumerate()
        .map(|(i, (t, &y))| (i, t.action, y))
        .collect();
    let object_picks: Vec<_> = batch
        .iter()
        .zip(&targets)
        .enumerate()
        .map(|(i, (t, &y))| (i, t.object, y))
        .collect();
    let la = tape.selected_squared_error(f.q_action, &action_picks, scale)?;
    let lo = tape.selected_squared_error(f.q_object, &object_picks, scale)?;
    let loss = tape.add(la, lo)?;
    let value = tape.value(loss).data()[0].as_f64();
    tape.backward(loss, &mut net.params)?;
    sgd_update(&mut net.params, hp.lr, hp.clip_norm)?;
    Ok(value)
}

/// One game taking part in a DQN run.
#[derive(Clone, Debug)]
pub struct DqnGame<'a> {
    pub spec: &'a GameSpec,
    /// Controller index in the network.
    pub head: usize,
    pub tokens: TokenMap,
}

/// Counters reported by [`run_dqn`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DqnStats {
    pub env_steps: u64,
    pub updates: u64,
    pub episodes: u64,
    pub target_syncs: u64,
}

/// Train `net` by Q-learning for `budget` environment steps.
///
/// With several games the game switches every episode, each game keeps
/// its own replay buffer, and every update draws from the buffer of the
/// game currently being played.
pub fn run_dqn<T: Real>(
    mut net: QNet<T>,
    games: &[DqnGame<'_>],
    hp: &HyperParams,
    seed: u64,
    budget: u64,
) -> Result<(QNet<T>, TrainingLog, DqnStats), Error> {
    hp.validate()?;
    if games.is_empty() {
        return Err(Error::Config("no games to train on".into()));
    }
    for g in games {
        if g.head >= net.heads().len() {
            return Err(Error::UnknownGame(g.spec.game_id.clone()));
        }
        if g.spec.rewards.episode_cap != hp.episode_cap {
            return Err(Error::Config(format!(
                "{} caps episodes at {} steps, hyperparameters say {}",
                g.spec.game_id, g.spec.rewards.episode_cap, hp.episode_cap
            )));
        }
    }
    let mut log = TrainingLog::default();
    let mut stats = DqnStats::default();
    if budget == 0 {
        return Ok((net, log, stats));
    }

    let mut target = TargetNet::new(&net);
    let mut buffers: Vec<ReplayBuffer> = games.iter().map(|_| ReplayBuffer::new(hp.replay_capacity)).collect();
    let mut env_rng = rng::stream(seed, Stream::Env);
    let mut explore_rng = rng::stream(seed, Stream::Explore);
    let mut replay_rng = rng::stream(seed, Stream::Replay);
    let eval_seed: u64 = rng::stream(seed, Stream::Eval).gen();
    let warm = hp.warmup.max(hp.batch_size);

    let mut interner = TokenInterner::default();
    let mut g = 0usize;
    let (mut state, mut obs) = games[g].spec.reset(env_rng.gen());
    let mut tokens = interner.intern(games[g].tokens.encode(games[g].spec, &obs.text)?);
    let mut loss_sum = 0.0;
    let mut loss_n = 0u64;

    for step in 0..budget {
        let game = &games[g];
        let epsilon = hp.epsilon.value(step, budget);
        let h = &net.heads()[game.head];
        let (na, no) = (h.n_actions, h.n_objects);
        let cmd = epsilon_greedy(na, no, epsilon, &mut explore_rng, || net.q_values(&tokens, game.head))?;
        let (next_state, r) = game.spec.step(&state, cmd)?;
        let next_tokens = interner.intern(game.tokens.encode(game.spec, &r.observation.text)?);
        buffers[g].push(Transition {
            state: tokens.clone(),
            action: cmd.action,
            object: cmd.object,
            reward: r.reward,
            next_state: next_tokens.clone(),
            done: r.done,
        });
        stats.env_steps += 1;

        if buffers[g].len() >= warm && (step + 1) % hp.train_every == 0 {
            let loss = train_step(&mut net, &mut target, &buffers[g], hp, game.head, &mut replay_rng)?;
            loss_sum += loss;
            loss_n += 1;
            stats.updates += 1;
            if stats.updates % hp.target_sync_interval == 0 {
                target.sync(&net)?;
                stats.target_syncs += 1;
            }
        }

        if r.done {
            stats.episodes += 1;
            g = (g + 1) % games.len();
            let (s, o) = games[g].spec.reset(env_rng.gen());
            state = s;
            tokens = interner.intern(games[g].tokens.encode(games[g].spec, &o.text)?);
            obs = o;
        } else {
            state = next_state;
            obs = r.observation;
            tokens = next_tokens;
        }

        if (step + 1) % hp.eval_interval == 0 || step + 1 == budget {
            let loss = if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 };
            for game in games {
                let e = evaluate(
                    &net,
                    game.head,
                    &game.tokens,
                    game.spec,
                    hp.eval_episodes,
                    eval_seed,
                    hp.eval_epsilon,
                )?;
                log.rows.push(LogRow {
                    step: step + 1,
                    game_id: game.spec.game_id.clone(),
                    avg_reward: e.avg_reward,
                    quest_completion: e.quest_completion,
                    epsilon,
                    loss,
                });
            }
            loss_sum = 0.0;
            loss_n = 0;
        }
    }
    let _ = obs;
    Ok((net, log, stats))
}

/// Fresh single-controller network sized for `spec`.
pub fn new_teacher<T: Real>(spec: &GameSpec, hp: &HyperParams, seed: u64) -> Result<QNet<T>, Error> {
    let dims = NetDims {
        vocab: spec.vocab.len(),
        d_emb: hp.d_emb,
        hidden: hp.hidden,
        linear1: hp.linear1,
    };
    let mut init = substream(seed, Stream::Init, 0);
    QNet::new(
        dims,
        &[(spec.game_id.clone(), spec.actions.len(), spec.objects.len())],
        &mut init,
    )
}

/// Train a single-game LSTM-DQN teacher for `budget` environment steps.
pub fn train_teacher<T: Real>(
    spec: &GameSpec,
    hp: &HyperParams,
    seed: u64,
    budget: u64,
) -> Result<(QNet<T>, TrainingLog), Error> {
    let net = new_teacher(spec, hp, seed)?;
    let games = [DqnGame {
        spec,
        head: 0,
        tokens: TokenMap::identity(),
    }];
    let (net, log, _) = run_dqn(net, &games, hp, seed, budget)?;
    Ok((net, log))
}
