use rand::Rng as _;

use super::{GameStore, TeacherStore, UnionVocab};
use crate::agent::{evaluate, HyperParams, LogRow, NetDims, QNet, TokenInterner, TokenMap, Tokens, TrainingLog};
use crate::env::{GameSpec, Vocabulary};
use crate::nn::{sgd_update, softmax_t, NodeId, Real, Tape, Tensor};
use crate::rng::{self, Stream};
use crate::Error;

/// A network with one controller per game plus the vocabulary its
/// embedding rows follow.
#[derive(Clone, Debug)]
pub struct MultiGameModel {
    pub net: QNet<f32>,
    pub vocab: Vocabulary,
    /// Per controller: game-local token ids → embedding rows.
    pub token_maps: Vec<TokenMap>,
}

impl MultiGameModel {
    pub fn head(&self, game_id: &str) -> Result<usize, Error> {
        self.net
            .head_index(game_id)
            .ok_or_else(|| Error::UnknownGame(game_id.to_owned()))
    }

    /// Scores of `game_id`'s controller for an observation text.
    pub fn q_values(&self, spec: &GameSpec, text: &str) -> Result<(Vec<f32>, Vec<f32>), Error> {
        let head = self.head(&spec.game_id)?;
        let tokens = self.token_maps[head].encode(spec, text)?;
        self.net.q_values(&tokens, head)
    }
}

/// Fresh student over the union vocabulary of `specs`, one controller per
/// game in the given order, with a first linear layer of width `d1`.
pub fn new_student(specs: &[&GameSpec], hp: &HyperParams, d1: usize, seed: u64) -> Result<MultiGameModel, Error> {
    if specs.is_empty() {
        return Err(Error::Config("a student needs at least one game".into()));
    }
    let union = UnionVocab::new(specs)?;
    let dims = NetDims {
        vocab: union.len(),
        d_emb: hp.d_emb,
        hidden: hp.hidden,
        linear1: d1,
    };
    let heads: Vec<_> = specs
        .iter()
        .map(|s| (s.game_id.clone(), s.actions.len(), s.objects.len()))
        .collect();
    let net = QNet::new(dims, &heads, &mut rng::substream(seed, Stream::Init, 1))?;
    let token_maps = specs
        .iter()
        .map(|s| union.token_map(&s.game_id))
        .collect::<Result<_, _>>()?;
    Ok(MultiGameModel {
        net,
        vocab: union.vocab().clone(),
        token_maps,
    })
}

/// `KL(softmax(q_T/τ) ‖ softmax(q_S))` on each head, summed over heads and
/// averaged over the batch. Teacher rows are `[B×|A|]` and `[B×|O|]`.
pub fn distill_loss<T: Real>(
    tape: &mut Tape<T>,
    teacher_action: &Tensor<T>,
    teacher_object: &Tensor<T>,
    student_action: NodeId,
    student_object: NodeId,
    tau: f64,
) -> Result<NodeId, Error> {
    let b = tape.value(student_action).rows();
    let scale = T::one() / T::from_f64(b as f64);
    let pa = soft_targets(teacher_action, tau)?;
    let po = soft_targets(teacher_object, tau)?;
    let la = tape.kl_div(student_action, pa, scale)?;
    let lo = tape.kl_div(student_object, po, scale)?;
    Ok(tape.add(la, lo)?)
}

/// Row-wise `softmax(q / τ)`, computed in f64.
fn soft_targets<T: Real>(q: &Tensor<T>, tau: f64) -> Result<Tensor<T>, Error> {
    let mut out = Vec::with_capacity(q.len());
    for r in 0..q.rows() {
        let row: Vec<f64> = q.row(r).iter().map(|v| v.as_f64()).collect();
        out.extend(softmax_t(&row, tau)?.into_iter().map(T::from_f64));
    }
    Ok(Tensor::new(q.shape(), out)?)
}

/// Counters reported by [`train_student`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DistillStats {
    pub updates: u64,
    /// Minibatches drawn from each game's store, in controller order.
    pub per_game: Vec<u64>,
}

struct Prepared {
    head: usize,
    tokens: Vec<Tokens>,
    q_action: Vec<f32>,
    q_object: Vec<f32>,
    n_actions: usize,
    n_objects: usize,
}

fn prepare(store: &GameStore, model: &MultiGameModel, interner: &mut TokenInterner) -> Result<Prepared, Error> {
    let head = model.head(&store.game_id)?;
    let h = &model.net.heads()[head];
    if h.n_actions != store.n_actions || h.n_objects != store.n_objects {
        return Err(Error::Store(format!(
            "store {} has {}x{} commands, controller has {}x{}",
            store.game_id, store.n_actions, store.n_objects, h.n_actions, h.n_objects
        )));
    }
    if store.is_empty() {
        return Err(Error::EmptyStore(store.game_id.clone()));
    }
    let map = &model.token_maps[head];
    let mut p = Prepared {
        head,
        tokens: Vec::with_capacity(store.len()),
        q_action: Vec::with_capacity(store.len() * store.n_actions),
        q_object: Vec::with_capacity(store.len() * store.n_objects),
        n_actions: store.n_actions,
        n_objects: store.n_objects,
    };
    for s in &store.samples {
        if s.tokens.is_empty() {
            return Err(Error::EmptyObservation);
        }
        p.tokens.push(interner.intern(map.try_apply(&s.tokens)?));
        p.q_action.extend_from_slice(&s.q_action);
        p.q_object.extend_from_slice(&s.q_object);
    }
    Ok(p)
}

/// Distill the teachers behind `store` into `model`.
///
/// Games take turns in round-robin order; each turn trains on one
/// episode-sized block (`hp.episode_cap` minibatches) drawn from that game's
/// store alone. One epoch gives every game the same number of minibatches,
/// enough to cover the largest store once. Every registered controller
/// must have a store. `specs` supply the games for periodic evaluation.
pub fn train_student(
    store: &TeacherStore,
    mut model: MultiGameModel,
    specs: &[&GameSpec],
    hp: &HyperParams,
    seed: u64,
    epochs: u64,
) -> Result<(MultiGameModel, TrainingLog, DistillStats), Error> {
    hp.validate()?;
    let mut interner = TokenInterner::default();
    let mut games = Vec::new();
    for h in model.net.heads() {
        let s = store
            .get(&h.game_id)
            .ok_or_else(|| Error::EmptyStore(h.game_id.clone()))?;
        games.push(prepare(s, &model, &mut interner)?);
    }
    let eval_specs: Vec<(usize, &GameSpec)> = specs
        .iter()
        .map(|s| Ok((model.head(&s.game_id)?, *s)))
        .collect::<Result<_, Error>>()?;

    let mut stats = DistillStats {
        updates: 0,
        per_game: vec![0; games.len()],
    };
    let mut log = TrainingLog::default();
    let per_game = games
        .iter()
        .map(|g| g.tokens.len().div_ceil(hp.batch_size) as u64)
        .max()
        .unwrap_or(0);
    let total = per_game * epochs;
    let block = hp.episode_cap as u64;
    let mut sample_rng = rng::stream(seed, Stream::Distill);
    let eval_seed: u64 = rng::stream(seed, Stream::Eval).gen();
    let mut loss_sum = 0.0;
    let mut loss_n = 0u64;

    let mut done = vec![0u64; games.len()];
    while done.iter().any(|&d| d < total) {
        for (gi, g) in games.iter().enumerate() {
            let turn = block.min(total - done[gi]);
            for _ in 0..turn {
                let loss = distill_step(&mut model.net, g, hp, &mut sample_rng)?;
                loss_sum += loss;
                loss_n += 1;
                done[gi] += 1;
                stats.per_game[gi] += 1;
                stats.updates += 1;
                if stats.updates % hp.eval_interval == 0 || stats.updates == total * games.len() as u64 {
                    let loss = loss_sum / loss_n as f64;
                    (loss_sum, loss_n) = (0.0, 0);
                    for &(head, spec) in &eval_specs {
                        let e = evaluate(
                            &model.net,
                            head,
                            &model.token_maps[head],
                            spec,
                            hp.eval_episodes,
                            eval_seed,
                            hp.eval_epsilon,
                        )?;
                        log.rows.push(LogRow {
                            step: stats.updates,
                            game_id: spec.game_id.clone(),
                            avg_reward: e.avg_reward,
                            quest_completion: e.quest_completion,
                            epsilon: hp.eval_epsilon,
                            loss,
                        });
                    }
                }
            }
        }
    }
    Ok((model, log, stats))
}

fn distill_step(net: &mut QNet<f32>, g: &Prepared, hp: &HyperParams, rng: &mut rng::Rng) -> Result<f64, Error> {
    let idx: Vec<usize> = (0..hp.batch_size).map(|_| rng.gen_range(0..g.tokens.len())).collect();
    let seqs: Vec<&[u32]> = idx.iter().map(|&i| &*g.tokens[i]).collect();
    let gather = |src: &[f32], width: usize| {
        let mut out = Vec::with_capacity(idx.len() * width);
        for &i in &idx {
            out.extend_from_slice(&src[i * width..(i + 1) * width]);
        }
        Tensor::matrix(idx.len(), width, out)
    };
    let ta = gather(&g.q_action, g.n_actions)?;
    let to = gather(&g.q_object, g.n_objects)?;
    let mut tape = Tape::new();
    let f = net.forward(&mut tape, &seqs, g.head)?;
    let loss = distill_loss(&mut tape, &ta, &to, f.q_action, f.q_object, hp.tau)?;
    let value = tape.value(loss).data()[0].as_f64();
    tape.backward(loss, &mut net.params)?;
    sgd_update(&mut net.params, hp.lr, hp.clip_norm)?;
    Ok(value)
}
