//! Gradient-check cases: every differentiable operation and the full
//! network losses, each built from a seed. Shared with the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgpd_core::agent::{NetDims, QNet};
use tgpd_core::distill::distill_loss;
use tgpd_core::nn::{lstm_step, softmax_t, LstmParams, NodeId, ParamStore, Tape, Tensor};

use super::fd::max_relative_error;

pub const SEEDS: u64 = 50;
pub const LINEAR_TOL: f64 = 1e-6;
pub const TOL: f64 = 1e-5;

type Loss = Box<dyn Fn(&ParamStore<f64>, &mut Tape<f64>) -> NodeId>;
type Built = (ParamStore<f64>, Loss);

pub struct Case {
    pub name: &'static str,
    pub tol: f64,
    build: fn(u64) -> Built,
}

impl Case {
    /// Worst relative error over all seeds, or the first seed over tolerance.
    pub fn run(&self) -> Result<f64, (u64, f64)> {
        let mut worst = 0.0f64;
        for seed in 0..SEEDS {
            let (mut store, loss) = (self.build)(seed);
            let err = max_relative_error(&mut store, loss);
            if !(err <= self.tol) {
                return Err((seed, err));
            }
            worst = worst.max(err);
        }
        Ok(worst)
    }
}

pub fn all() -> Vec<Case> {
    vec![
        Case {
            name: "matmul",
            tol: LINEAR_TOL,
            build: matmul,
        },
        Case {
            name: "add_bias/add/scale",
            tol: LINEAR_TOL,
            build: add_bias_add_scale,
        },
        Case {
            name: "mul/relu/sigmoid/tanh",
            tol: TOL,
            build: mul_and_activations,
        },
        Case {
            name: "slice_cols/embedding/sequence_mean",
            tol: LINEAR_TOL,
            build: slice_gather_and_means,
        },
        Case {
            name: "softmax_t",
            tol: TOL,
            build: softmax_with_temperature,
        },
        Case {
            name: "squared_td_loss",
            tol: TOL,
            build: squared_td_loss,
        },
        Case {
            name: "kl_loss",
            tol: TOL,
            build: kl_loss,
        },
        Case {
            name: "lstm_step",
            tol: TOL,
            build: lstm_cell,
        },
        Case {
            name: "lstm-dqn forward + td loss",
            tol: TOL,
            build: lstm_dqn_td_loss,
        },
        Case {
            name: "distill_loss",
            tol: TOL,
            build: distill_kl,
        },
    ]
}

#[allow(dead_code)]
pub fn get(name: &str) -> Case {
    all().into_iter().find(|c| c.name == name).expect("known case")
}


fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries in `±[0.05, 1]`, away from the ReLU kink.
fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let v = rng.gen_range(0.05..1.0);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    Tensor::new(shape, data).unwrap()
}

/// Reduce any node to a scalar through a fixed random projection, so
/// every output entry carries a distinct weight.
fn project(tape: &mut Tape<f64>, x: NodeId, seed: u64) -> NodeId {
    let shape = tape.value(x).shape().to_vec();
    let (rows, cols) = if shape.len() == 1 { (1, shape[0]) } else { (shape[0], shape[1]) };
    let mut r = rng(seed ^ 0x5eed);
    let w = tape.input(rand_tensor(&shape, &mut r)).unwrap();
    let weighted = tape.mul(x, w).unwrap();
    let ones_c = tape.input(Tensor::new(&[cols, 1], vec![1.0; cols]).unwrap()).unwrap();
    let ones_r = tape.input(Tensor::new(&[1, rows], vec![1.0; rows]).unwrap()).unwrap();
    let col = tape.matmul(weighted, ones_c).unwrap();
    tape.matmul(ones_r, col).unwrap()
}

fn params(tensors: Vec<Tensor<f64>>) -> ParamStore<f64> {
    let mut s = ParamStore::new();
    for (i, t) in tensors.into_iter().enumerate() {
        s.add(format!("p{i}"), t).unwrap();
    }
    s
}

fn ids(store: &ParamStore<f64>) -> Vec<tgpd_core::nn::ParamId> {
    store.iter().map(|(id, _)| id).collect()
}

fn matmul(seed: u64) -> Built {
        let mut r = rng(seed);
        let (m, k, n) = (r.gen_range(1..5), r.gen_range(1..5), r.gen_range(1..5));
        let store = params(vec![rand_tensor(&[m, k], &mut r), rand_tensor(&[k, n], &mut r)]);
        (
            store,
            Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
                let p = ids(s);
                let (a, b) = (t.param(s, p[0]), t.param(s, p[1]));
                let y = t.matmul(a, b).unwrap();
                project(t, y, seed)
            }),
        )
}

fn add_bias_add_scale(seed: u64) -> Built {
        let mut r = rng(seed);
        let (m, n) = (r.gen_range(1..5), r.gen_range(1..5));
        let store = params(vec![
            rand_tensor(&[m, n], &mut r),
            rand_tensor(&[n], &mut r),
            rand_tensor(&[m, n], &mut r),
        ]);
        (
            store,
            Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
                let p = ids(s);
                let (x, b, z) = (t.param(s, p[0]), t.param(s, p[1]), t.param(s, p[2]));
                let y = t.add_bias(x, b).unwrap();
                let y = t.add(y, z).unwrap();
                let y = t.scale(y, -0.7).unwrap();
                project(t, y, seed)
            }),
        )
}

fn mul_and_activations(seed: u64) -> Built {
        let mut r = rng(seed);
        let (m, n) = (r.gen_range(1..5), r.gen_range(1..5));
        let store = params(vec![rand_tensor(&[m, n], &mut r), rand_tensor(&[m, n], &mut r)]);
        (
            store,
            Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
                let p = ids(s);
                let (a, b) = (t.param(s, p[0]), t.param(s, p[1]));
                let relu = t.relu(a).unwrap();
                let sig = t.sigmoid(b).unwrap();
                let th = t.tanh(a).unwrap();
                let y = t.mul(relu, sig).unwrap();
                let y = t.mul(y, th).unwrap();
                let y = t.add(y, b).unwrap();
                project(t, y, seed)
            }),
        )
}

fn slice_gather_and_means(seed: u64) -> Built {
        let mut r = rng(seed);
        let (vocab, d, b) = (r.gen_range(2..7), r.gen_range(2..5), r.gen_range(1..4));
        let steps = r.gen_range(1..4);
        let ids_per_step: Vec<Vec<usize>> = (0..steps).map(|_| (0..b).map(|_| r.gen_range(0..vocab)).collect()).collect();
        let lens: Vec<usize> = (0..b).map(|_| r.gen_range(1..=steps)).collect();
        let start = r.gen_range(0..d - 1);
        let store = params(vec![rand_tensor(&[vocab, d], &mut r)]);
        (
            store,
            Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
                let table = t.param(s, ids(s)[0]);
                let xs: Vec<NodeId> = ids_per_step.iter().map(|i| t.embedding_lookup(table, i).unwrap()).collect();
                let full = t.sequence_mean(&xs).unwrap();
                let masked = t.masked_sequence_mean(&xs, &lens).unwrap();
                let y = t.add(full, masked).unwrap();
                let y = t.slice_cols(y, start, d - start).unwrap();
                project(t, y, seed)
            }),
        )
}

fn softmax_with_temperature(seed: u64) -> Built {
        let mut r = rng(seed);
        let (m, n) = (r.gen_range(1..4), r.gen_range(2..6));
        let tau = [0.5, 1.0, 2.0][seed as usize % 3];
        let store = params(vec![rand_tensor(&[m, n], &mut r)]);
        (
            store,
            Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
                let x = t.param(s, ids(s)[0]);
                let y = t.softmax_t(x, tau).unwrap();
                project(t, y, seed)
            }),
        )
}

fn squared_td_loss(seed: u64) -> Built {
        let mut r = rng(seed);
        let n = r.gen_range(2..6);
        let action = r.gen_range(0..n);
        let y = r.gen_range(-1.0..1.0);
        let store = params(vec![rand_tensor(&[n], &mut r)]);
        (
            store,
            Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
                let q = t.param(s, ids(s)[0]);
                t.squared_td_loss(q, action, y).unwrap()
            }),
        )
}

fn kl_loss(seed: u64) -> Built {
        let mut r = rng(seed);
        let n = r.gen_range(2..6);
        let teacher: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let tau = [0.01, 0.1, 1.0][seed as usize % 3];
        let p = Tensor::vector(softmax_t(&teacher, tau).unwrap());
        let store = params(vec![rand_tensor(&[n], &mut r)]);
        (
            store,
            Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
                let q = t.param(s, ids(s)[0]);
                t.kl_loss(&p, q).unwrap()
            }),
        )
}

fn lstm_cell(seed: u64) -> Built {
        let mut r = rng(seed);
        let (b, d, h) = (r.gen_range(1..4), r.gen_range(1..4), r.gen_range(1..4));
        let mut store = ParamStore::new();
        let cell = LstmParams::new(&mut store, "lstm", d, h, &mut r).unwrap();
        let x = store.add("x", rand_tensor(&[b, d], &mut r)).unwrap();
        let h0 = store.add("h0", rand_tensor(&[b, h], &mut r)).unwrap();
        let c0 = store.add("c0", rand_tensor(&[b, h], &mut r)).unwrap();
        (
            store,
            Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
                let nodes = cell.bind(t, s);
                let (x, h0, c0) = (t.param(s, x), t.param(s, h0), t.param(s, c0));
                let (h1, c1) = lstm_step(t, &nodes, x, h0, c0).unwrap();
                let (h2, c2) = lstm_step(t, &nodes, x, h1, c1).unwrap();
                let y = t.add(h2, c2).unwrap();
                project(t, y, seed)
            }),
        )
}

fn lstm_dqn_td_loss(seed: u64) -> Built {
        let mut r = rng(seed);
        let dims = NetDims {
            vocab: 7,
            d_emb: 3,
            hidden: 4,
            linear1: 5,
        };
        let net = QNet::<f64>::new(dims, &[("g".into(), 3, 4)], &mut r).unwrap();
        let b = r.gen_range(1..4);
        let seqs: Vec<Vec<u32>> = (0..b)
            .map(|_| (0..r.gen_range(1..5)).map(|_| r.gen_range(1..7)).collect())
            .collect();
        let picks: Vec<(usize, usize, usize, f64)> = (0..b)
            .map(|i| (i, r.gen_range(0..3), r.gen_range(0..4), r.gen_range(-1.0..1.0)))
            .collect();
        (
            net.params.clone(),
            Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
                let net = QNet::from_params(s.clone()).unwrap();
                let views: Vec<&[u32]> = seqs.iter().map(|v| v.as_slice()).collect();
                let f = net.forward(t, &views, 0).unwrap();
                let scale = 1.0 / picks.len() as f64;
                let a: Vec<_> = picks.iter().map(|&(i, a, _, y)| (i, a, y)).collect();
                let o: Vec<_> = picks.iter().map(|&(i, _, o, y)| (i, o, y)).collect();
                let la = t.selected_squared_error(f.q_action, &a, scale).unwrap();
                let lo = t.selected_squared_error(f.q_object, &o, scale).unwrap();
                t.add(la, lo).unwrap()
            }),
        )
}

fn distill_kl(seed: u64) -> Built {
    let mut r = rng(seed);
    let b = r.gen_range(1..4);
    let (na, no) = (r.gen_range(2..5), r.gen_range(2..6));
    let tau = [0.01, 0.5, 1.0][seed as usize % 3];
    let ta = Tensor::new(&[b, na], (0..b * na).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
    let to = Tensor::new(&[b, no], (0..b * no).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
    let store = params(vec![rand_tensor(&[b, na], &mut r), rand_tensor(&[b, no], &mut r)]);
    (
        store,
        Box::new(move |s: &ParamStore<f64>, t: &mut Tape<f64>| {
            let p = ids(s);
            let (qa, qo) = (t.param(s, p[0]), t.param(s, p[1]));
            distill_loss(t, &ta, &to, qa, qo, tau).unwrap()
        }),
    )
}
