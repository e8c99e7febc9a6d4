use std::path::Path;

use rand::Rng as _;

use crate::agent::{select_command, QNet, TokenMap};
use crate::env::{EnvState, GameSpec, Observation};
use crate::nn::{put_str, put_u32, write_atomic, Reader};
use crate::rng::{self, Stream};
use crate::Error;

pub const STORE_MAGIC: &[u8; 4] = b"TGDS";
pub const STORE_VERSION: u32 = 1;

/// One observation with the teacher's raw scores for it.
#[derive(Clone, Debug, PartialEq)]
pub struct DistillSample {
    /// Token ids in the game's own vocabulary.
    pub tokens: Vec<u32>,
    pub q_action: Vec<f32>,
    pub q_object: Vec<f32>,
}

/// Samples produced by one teacher in its own game.
#[derive(Clone, Debug, PartialEq)]
pub struct GameStore {
    pub game_id: String,
    pub n_actions: usize,
    pub n_objects: usize,
    pub samples: Vec<DistillSample>,
}

impl GameStore {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(STORE_MAGIC);
        put_u32(&mut out, STORE_VERSION);
        put_str(&mut out, &self.game_id);
        put_u32(&mut out, self.n_actions as u32);
        put_u32(&mut out, self.n_objects as u32);
        put_u32(&mut out, self.samples.len() as u32);
        for s in &self.samples {
            put_u32(&mut out, s.tokens.len() as u32);
            for &t in &s.tokens {
                put_u32(&mut out, t);
            }
            for v in s.q_action.iter().chain(&s.q_object) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, Error> {
        let bad = |e: crate::nn::CheckpointError| Error::Store(e.to_string());
        let mut r = Reader::new(bytes);
        if r.take(4, "magic").map_err(bad)? != STORE_MAGIC {
            return Err(Error::Store("not a teacher store (bad magic)".into()));
        }
        let version = r.u32("version").map_err(bad)?;
        if version != STORE_VERSION {
            return Err(Error::Store(format!("unsupported store version {version}")));
        }
        let game_id = r.string("game id").map_err(bad)?;
        let n_actions = r.u32("action count").map_err(bad)? as usize;
        let n_objects = r.u32("object count").map_err(bad)? as usize;
        let count = r.u32("sample count").map_err(bad)? as usize;
        let mut samples = Vec::with_capacity(count.min(r.remaining() / 4));
        for _ in 0..count {
            let n = r.u32("token count").map_err(bad)? as usize;
            let raw = r.take(4 * n, "tokens").map_err(bad)?;
            let tokens = raw
                .chunks_exact(4)
                .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            let raw = r.take(4 * (n_actions + n_objects), "q values").map_err(bad)?;
            let q: Vec<f32> = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            let (a, o) = q.split_at(n_actions);
            samples.push(DistillSample {
                tokens,
                q_action: a.to_vec(),
                q_object: o.to_vec(),
            });
        }
        if r.remaining() != 0 {
            return Err(Error::Store(format!("{} trailing bytes", r.remaining())));
        }
        Ok(Self {
            game_id,
            n_actions,
            n_objects,
            samples,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        Ok(write_atomic(path, &self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Check the store against the game it claims to come from.
    pub fn validate(&self, spec: &GameSpec) -> Result<(), Error> {
        if self.game_id != spec.game_id {
            return Err(Error::Store(format!(
                "store for {} used with game {}",
                self.game_id, spec.game_id
            )));
        }
        if self.n_actions != spec.actions.len() || self.n_objects != spec.objects.len() {
            return Err(Error::Store(format!(
                "store {} has {}x{} commands, game has {}x{}",
                self.game_id,
                self.n_actions,
                self.n_objects,
                spec.actions.len(),
                spec.objects.len()
            )));
        }
        let v = spec.vocab.len() as u32;
        if let Some(bad) = self
            .samples
            .iter()
            .flat_map(|s| &s.tokens)
            .find(|&&t| t >= v)
        {
            return Err(Error::Store(format!("token id {bad} outside the {v}-word vocabulary")));
        }
        Ok(())
    }
}

/// Per-game stores, in the order games are registered with the student.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TeacherStore {
    pub games: Vec<GameStore>,
}

impl TeacherStore {
    pub fn get(&self, game_id: &str) -> Option<&GameStore> {
        self.games.iter().find(|g| g.game_id == game_id)
    }
}

/// Endless ε-greedy rollout of a teacher in its own game, yielding each
/// visited state with the teacher's scores for it.
pub struct TeacherRollout<'a> {
    teacher: &'a QNet<f32>,
    spec: &'a GameSpec,
    head: usize,
    epsilon: f64,
    env_rng: rng::Rng,
    act_rng: rng::Rng,
    current: Option<(EnvState, Observation)>,
}

impl<'a> TeacherRollout<'a> {
    pub fn new(teacher: &'a QNet<f32>, spec: &'a GameSpec, epsilon: f64, seed: u64) -> Result<Self, Error> {
        let head = teacher
            .head_index(&spec.game_id)
            .ok_or_else(|| Error::UnknownGame(spec.game_id.clone()))?;
        let h = &teacher.heads()[head];
        if h.n_actions != spec.actions.len()
            || h.n_objects != spec.objects.len()
            || teacher.dims().vocab != spec.vocab.len()
        {
            return Err(Error::Config(format!("teacher does not match game {}", spec.game_id)));
        }
        Ok(Self {
            teacher,
            spec,
            head,
            epsilon,
            env_rng: rng::substream(seed, Stream::Distill, 0),
            act_rng: rng::substream(seed, Stream::Distill, 1),
            current: None,
        })
    }

    /// The next visited state and its sample; advances the game by one step.
    pub fn next_sample(&mut self) -> Result<(EnvState, DistillSample), Error> {
        let (state, obs) = match self.current.take() {
            Some(c) => c,
            None => self.spec.reset(self.env_rng.gen()),
        };
        let tokens = TokenMap::identity().encode(self.spec, &obs.text)?;
        let (qa, qo) = self.teacher.q_values(&tokens, self.head)?;
        let cmd = select_command(&qa, &qo, self.epsilon, &mut self.act_rng);
        let (next, r) = self.spec.step(&state, cmd)?;
        if !r.done {
            self.current = Some((next, r.observation));
        }
        let sample = DistillSample {
            tokens,
            q_action: qa,
            q_object: qo,
        };
        Ok((state, sample))
    }
}

/// Roll the teacher ε-greedily in its own game and record its scores for
/// every visited state.
pub fn generate_teacher_data(
    teacher: &QNet<f32>,
    spec: &GameSpec,
    n_samples: usize,
    epsilon_gen: f64,
    seed: u64,
) -> Result<GameStore, Error> {
    let mut rollout = TeacherRollout::new(teacher, spec, epsilon_gen, seed)?;
    let samples = (0..n_samples)
        .map(|_| rollout.next_sample().map(|(_, s)| s))
        .collect::<Result<_, _>>()?;
    Ok(GameStore {
        game_id: spec.game_id.clone(),
        n_actions: spec.actions.len(),
        n_objects: spec.objects.len(),
        samples,
    })
}
