//! LSTM-DQN network with one or more per-game output controllers.
//!
//! A single-game teacher is the one-controller case; the distilled
//! student and the multi-task baseline register one controller per game
//! on a shared trunk.

use rand::Rng;

use crate::nn::{uniform, LstmParams, NnError, NodeId, ParamId, ParamStore, Real, Tape, Tensor};
use crate::Error;

/// Trunk sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetDims {
    pub vocab: usize,
    pub d_emb: usize,
    pub hidden: usize,
    pub linear1: usize,
}

/// One controller: action and object heads for a game.
#[derive(Clone, Debug)]
pub struct Head {
    pub game_id: String,
    pub n_actions: usize,
    pub n_objects: usize,
    action_w: ParamId,
    action_b: ParamId,
    object_w: ParamId,
    object_b: ParamId,
}

impl Head {
    pub fn param_names(game_id: &str) -> [String; 4] {
        [
            format!("heads.{game_id}.action.weight"),
            format!("heads.{game_id}.action.bias"),
            format!("heads.{game_id}.object.weight"),
            format!("heads.{game_id}.object.bias"),
        ]
    }
}

/// Node handles of one batched forward pass.
#[derive(Clone, Copy, Debug)]
pub struct Forward {
    /// `[B×H]` mean of the per-word LSTM outputs.
    pub mean_pool: NodeId,
    /// `[B×D₁]` first linear layer after ReLU.
    pub relu: NodeId,
    /// `[B×|A|]`
    pub q_action: NodeId,
    /// `[B×|O|]`
    pub q_object: NodeId,
}

#[derive(Clone, Debug)]
pub struct QNet<T> {
    pub params: ParamStore<T>,
    dims: NetDims,
    embedding: ParamId,
    lstm: LstmParams,
    linear1_w: ParamId,
    linear1_b: ParamId,
    heads: Vec<Head>,
}

pub const EMBEDDING: &str = "embedding";
pub const LINEAR1_WEIGHT: &str = "linear1.weight";
pub const LINEAR1_BIAS: &str = "linear1.bias";

impl<T: Real> QNet<T> {
    /// Randomly initialised network with one controller per `(game_id, |A|, |O|)`.
    pub fn new<R: Rng + ?Sized>(
        dims: NetDims,
        heads: &[(String, usize, usize)],
        rng: &mut R,
    ) -> Result<Self, Error> {
        if heads.is_empty() {
            return Err(Error::Config("a network needs at least one controller".into()));
        }
        let mut params = ParamStore::new();
        let embedding = params.add(EMBEDDING, uniform(&[dims.vocab, dims.d_emb], 1.0, rng))?;
        let lstm = LstmParams::new(&mut params, "lstm", dims.d_emb, dims.hidden, rng)?;
        let b1 = 1.0 / (dims.hidden as f64).sqrt();
        let linear1_w = params.add(LINEAR1_WEIGHT, uniform(&[dims.hidden, dims.linear1], b1, rng))?;
        let linear1_b = params.add(LINEAR1_BIAS, uniform(&[dims.linear1], b1, rng))?;
        let mut net = Self {
            params,
            dims,
            embedding,
            lstm,
            linear1_w,
            linear1_b,
            heads: Vec::new(),
        };
        for (g, a, o) in heads {
            net.add_head(g, *a, *o, rng)?;
        }
        Ok(net)
    }

    pub fn add_head<R: Rng + ?Sized>(
        &mut self,
        game_id: &str,
        n_actions: usize,
        n_objects: usize,
        rng: &mut R,
    ) -> Result<usize, Error> {
        if self.head_index(game_id).is_some() {
            return Err(Error::Config(format!("duplicate controller for {game_id}")));
        }
        let d1 = self.dims.linear1;
        let b = 1.0 / (d1 as f64).sqrt();
        let [aw, ab, ow, ob] = Head::param_names(game_id);
        let head = Head {
            game_id: game_id.to_owned(),
            n_actions,
            n_objects,
            action_w: self.params.add(aw, uniform(&[d1, n_actions], b, rng))?,
            action_b: self.params.add(ab, uniform(&[n_actions], b, rng))?,
            object_w: self.params.add(ow, uniform(&[d1, n_objects], b, rng))?,
            object_b: self.params.add(ob, uniform(&[n_objects], b, rng))?,
        };
        self.heads.push(head);
        Ok(self.heads.len() - 1)
    }

    /// Rebuild a network around an existing store (e.g. from a checkpoint),
    /// discovering controllers from `heads.<game>.action.weight` names.
    pub fn from_params(params: ParamStore<T>) -> Result<Self, Error> {
        let missing = |n: &str| Error::Nn(NnError::MissingParam(n.to_owned()));
        let embedding = params.id(EMBEDDING).ok_or_else(|| missing(EMBEDDING))?;
        let lstm = LstmParams::find(&params, "lstm")?;
        let linear1_w = params.id(LINEAR1_WEIGHT).ok_or_else(|| missing(LINEAR1_WEIGHT))?;
        let linear1_b = params.id(LINEAR1_BIAS).ok_or_else(|| missing(LINEAR1_BIAS))?;
        let e = params.value(embedding);
        let l1 = params.value(linear1_w);
        let dims = NetDims {
            vocab: e.rows(),
            d_emb: e.cols(),
            hidden: lstm.hidden,
            linear1: l1.cols(),
        };
        if lstm.input_dim != dims.d_emb || l1.rows() != dims.hidden || params.value(linear1_b).len() != dims.linear1 {
            return Err(Error::Nn(NnError::Shape("inconsistent trunk shapes".into())));
        }
        let mut heads = Vec::new();
        for (_, p) in params.iter() {
            let Some(game) = p
                .name
                .strip_prefix("heads.")
                .and_then(|n| n.strip_suffix(".action.weight"))
            else {
                continue;
            };
            let [aw, ab, ow, ob] = Head::param_names(game);
            let get = |n: &String| params.id(n).ok_or_else(|| missing(n));
            let head = Head {
                game_id: game.to_owned(),
                n_actions: params.value(get(&aw)?).cols(),
                n_objects: params.value(get(&ow)?).cols(),
                action_w: get(&aw)?,
                action_b: get(&ab)?,
                object_w: get(&ow)?,
                object_b: get(&ob)?,
            };
            for (w, b, n) in [
                (head.action_w, head.action_b, head.n_actions),
                (head.object_w, head.object_b, head.n_objects),
            ] {
                if params.value(w).rows() != dims.linear1 || params.value(b).len() != n {
                    return Err(Error::Nn(NnError::Shape(format!("inconsistent controller {game}"))));
                }
            }
            heads.push(head);
        }
        if heads.is_empty() {
            return Err(Error::Config("no controllers found".into()));
        }
        let expected = 6 + 4 * heads.len();
        if params.len() != expected {
            return Err(Error::Config(format!(
                "{} arrays do not form a trunk plus {} controllers",
                params.len(),
                heads.len()
            )));
        }
        Ok(Self {
            params,
            dims,
            embedding,
            lstm,
            linear1_w,
            linear1_b,
            heads,
        })
    }

    pub fn dims(&self) -> NetDims {
        self.dims
    }

    pub fn heads(&self) -> &[Head] {
        &self.heads
    }

    pub fn head_index(&self, game_id: &str) -> Option<usize> {
        self.heads.iter().position(|h| h.game_id == game_id)
    }

    pub fn embedding_id(&self) -> ParamId {
        self.embedding
    }

    pub fn lstm(&self) -> &LstmParams {
        &self.lstm
    }

    pub fn linear1_ids(&self) -> (ParamId, ParamId) {
        (self.linear1_w, self.linear1_b)
    }

    /// `(weight, bias)` ids of a controller's action and object heads.
    pub fn head_ids(&self, head: usize) -> [(ParamId, ParamId); 2] {
        let h = &self.heads[head];
        [(h.action_w, h.action_b), (h.object_w, h.object_b)]
    }

    /// Embedding → LSTM (word by word) → mean over each sequence's own
    /// length. Returns the `[B×H]` mean-pool node.
    pub fn encode(&self, tape: &mut Tape<T>, seqs: &[&[u32]]) -> Result<NodeId, Error> {
        if seqs.is_empty() || seqs.iter().any(|s| s.is_empty()) {
            return Err(Error::EmptyObservation);
        }
        let b = seqs.len();
        let max_len = seqs.iter().map(|s| s.len()).max().unwrap_or(0);
        let lens: Vec<usize> = seqs.iter().map(|s| s.len()).collect();
        let table = tape.param(&self.params, self.embedding);
        let cell = self.lstm.bind(tape, &self.params);
        let mut h = tape.input(Tensor::zeros(&[b, self.dims.hidden]))?;
        let mut c = tape.input(Tensor::zeros(&[b, self.dims.hidden]))?;
        let mut outputs = Vec::with_capacity(max_len);
        let mut ids = vec![0usize; b];
        for t in 0..max_len {
            for (slot, s) in ids.iter_mut().zip(seqs) {
                // Finished rows are padded with word 0; the mean ignores them.
                *slot = s.get(t).map_or(0, |&w| w as usize);
            }
            let x = tape.embedding_lookup(table, &ids)?;
            let (h2, c2) = crate::nn::lstm_step(tape, &cell, x, h, c)?;
            outputs.push(h2);
            h = h2;
            c = c2;
        }
        Ok(tape.masked_sequence_mean(&outputs, &lens)?)
    }

    /// Linear layer + ReLU on top of the mean pool.
    pub fn hidden_layer(&self, tape: &mut Tape<T>, mean_pool: NodeId) -> Result<NodeId, Error> {
        let w = tape.param(&self.params, self.linear1_w);
        let b = tape.param(&self.params, self.linear1_b);
        let z = tape.matmul(mean_pool, w)?;
        let z = tape.add_bias(z, b)?;
        Ok(tape.relu(z)?)
    }

    /// The two linear heads of controller `head`.
    pub fn controller(&self, tape: &mut Tape<T>, relu: NodeId, head: usize) -> Result<(NodeId, NodeId), Error> {
        let h = self.heads.get(head).ok_or_else(|| Error::UnknownGame(format!("#{head}")))?;
        let mut linear = |w: ParamId, b: ParamId| -> Result<NodeId, Error> {
            let wn = tape.param(&self.params, w);
            let bn = tape.param(&self.params, b);
            let z = tape.matmul(relu, wn)?;
            Ok(tape.add_bias(z, bn)?)
        };
        let qa = linear(h.action_w, h.action_b)?;
        let qo = linear(h.object_w, h.object_b)?;
        Ok((qa, qo))
    }

    pub fn forward(&self, tape: &mut Tape<T>, seqs: &[&[u32]], head: usize) -> Result<Forward, Error> {
        if head >= self.heads.len() {
            return Err(Error::UnknownGame(format!("#{head}")));
        }
        let mean_pool = self.encode(tape, seqs)?;
        let relu = self.hidden_layer(tape, mean_pool)?;
        let (q_action, q_object) = self.controller(tape, relu, head)?;
        Ok(Forward {
            mean_pool,
            relu,
            q_action,
            q_object,
        })
    }

    /// Action and object scores for one token sequence.
    pub fn q_values(&self, tokens: &[u32], head: usize) -> Result<(Vec<T>, Vec<T>), Error> {
        let mut tape = Tape::new();
        let f = self.forward(&mut tape, &[tokens], head)?;
        Ok((
            tape.value(f.q_action).data().to_vec(),
            tape.value(f.q_object).data().to_vec(),
        ))
    }

    /// Scores for a batch; row `i` belongs to `seqs[i]`.
    pub fn q_values_batch(&self, seqs: &[&[u32]], head: usize) -> Result<(Tensor<T>, Tensor<T>), Error> {
        let mut tape = Tape::new();
        let f = self.forward(&mut tape, seqs, head)?;
        Ok((tape.value(f.q_action).clone(), tape.value(f.q_object).clone()))
    }
}
