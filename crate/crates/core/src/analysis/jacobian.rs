use rand::Rng as _;

use crate::agent::{select_command, QNet, TokenMap};
use crate::env::GameSpec;
use crate::nn::{NodeId, Real, Tape, Tensor};
use crate::rng::{self, Stream};
use crate::Error;

/// Layers whose outputs the heat maps relate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    MeanPool,
    Relu,
    ActionHead,
    ObjectHead,
}

/// A downstream layer differentiated with respect to an upstream one.
/// Only three pairs are meaningful: ReLU on mean pool, and either head on
/// ReLU.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerPair {
    upstream: Layer,
    downstream: Layer,
}

impl LayerPair {
    pub const RELU_MEAN_POOL: Self = Self {
        upstream: Layer::MeanPool,
        downstream: Layer::Relu,
    };
    pub const ACTION_RELU: Self = Self {
        upstream: Layer::Relu,
        downstream: Layer::ActionHead,
    };
    pub const OBJECT_RELU: Self = Self {
        upstream: Layer::Relu,
        downstream: Layer::ObjectHead,
    };

    pub fn new(upstream: Layer, downstream: Layer) -> Result<Self, Error> {
        let p = Self { upstream, downstream };
        if [Self::RELU_MEAN_POOL, Self::ACTION_RELU, Self::OBJECT_RELU].contains(&p) {
            Ok(p)
        } else {
            Err(Error::Unsupported(format!("jacobian of {downstream:?} with respect to {upstream:?}")))
        }
    }

    pub fn upstream(&self) -> Layer {
        self.upstream
    }

    pub fn downstream(&self) -> Layer {
        self.downstream
    }

    /// Short label used in file names.
    pub fn label(&self) -> &'static str {
        match self.downstream {
            Layer::Relu => "relu_meanpool",
            Layer::ActionHead => "action_relu",
            _ => "object_relu",
        }
    }
}

/// Mean over `states` of `∂downstream / ∂upstream`, as a
/// `[downstream × upstream]` matrix, for controller `head`.
///
/// Each state's jacobian comes from one reverse sweep per downstream
/// unit, run on a tape that starts at the upstream layer.
pub fn mean_jacobian<T: Real>(
    net: &QNet<T>,
    head: usize,
    states: &[Vec<u32>],
    pair: LayerPair,
) -> Result<Tensor<f64>, Error> {
    if states.is_empty() {
        return Err(Error::Config("mean jacobian needs at least one state".into()));
    }
    if head >= net.heads().len() {
        return Err(Error::UnknownGame(format!("#{head}")));
    }
    let mut sum: Option<Tensor<f64>> = None;
    for s in states {
        let j = jacobian(net, head, s, pair)?;
        match &mut sum {
            None => sum = Some(j),
            Some(acc) => acc.data_mut().iter_mut().zip(j.data()).for_each(|(a, b)| *a += b),
        }
    }
    let mut mean = sum.expect("non-empty");
    let n = states.len() as f64;
    mean.data_mut().iter_mut().for_each(|v| *v /= n);
    Ok(mean)
}

fn jacobian<T: Real>(net: &QNet<T>, head: usize, tokens: &[u32], pair: LayerPair) -> Result<Tensor<f64>, Error> {
    let mut tape = Tape::new();
    let mean_pool = net.encode(&mut tape, &[tokens])?;
    let relu = net.hidden_layer(&mut tape, mean_pool)?;

    // Restart from the upstream activations so the sweeps stop there.
    let mut sub = Tape::new();
    if pair.upstream == Layer::MeanPool {
        let up = sub.input(tape.value(mean_pool).clone())?;
        let down = net.hidden_layer(&mut sub, up)?;
        return sweep(&sub, up, down);
    }
    let up = sub.input(tape.value(relu).clone())?;
    let (qa, qo) = net.controller(&mut sub, up, head)?;
    let down = if pair.downstream == Layer::ActionHead { qa } else { qo };
    sweep(&sub, up, down)
}

/// Rows of `∂out/∂input`, one reverse sweep per output unit.
fn sweep<T: Real>(tape: &Tape<T>, input: NodeId, out: NodeId) -> Result<Tensor<f64>, Error> {
    let (n_out, n_in) = (tape.value(out).len(), tape.value(input).len());
    let shape = tape.value(out).shape().to_vec();
    let mut rows = Vec::with_capacity(n_out * n_in);
    for j in 0..n_out {
        let mut seed = Tensor::zeros(&shape);
        seed.data_mut()[j] = T::one();
        let g = tape.gradients(out, seed)?;
        match g.get(input) {
            Some(t) => rows.extend(t.data().iter().map(|v| v.as_f64())),
            None => rows.extend(std::iter::repeat(0.0).take(n_in)),
        }
    }
    Ok(Tensor::matrix(n_out, n_in, rows)?)
}

/// `n` observation token sequences met while playing controller `head`
/// ε-greedily in `spec`.
pub fn sample_states<T: Real>(
    net: &QNet<T>,
    head: usize,
    tokens: &TokenMap,
    spec: &GameSpec,
    n: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<Vec<u32>>, Error> {
    let mut env_rng = rng::substream(seed, Stream::Analysis, 0);
    let mut act_rng = rng::substream(seed, Stream::Analysis, 1);
    let mut out = Vec::with_capacity(n);
    let mut current = None;
    while out.len() < n {
        let (state, obs) = match current.take() {
            Some(c) => c,
            None => spec.reset(env_rng.gen()),
        };
        let ids = tokens.encode(spec, &obs.text)?;
        let (qa, qo) = net.q_values(&ids, head)?;
        let cmd = select_command(&qa, &qo, epsilon, &mut act_rng);
        out.push(ids);
        let (next, r) = spec.step(&state, cmd)?;
        if !r.done {
            current = Some((next, r.observation));
        }
    }
    Ok(out)
}
