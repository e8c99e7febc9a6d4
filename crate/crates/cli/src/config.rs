//! Experiment configuration: an optional JSON file overlaid by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tgpd_core::agent::HyperParams;

use crate::Failure;

/// Teacher and baseline training length in environment steps.
pub const DEFAULT_TEACHER_BUDGET: u64 = 30_000;
/// Distillation samples recorded per game.
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Teacher exploration while recording distillation data.
pub const DEFAULT_EPSILON_GEN: f64 = 0.05;
pub const DEFAULT_EPOCHS: u64 = 10;
pub const DEFAULT_D1: usize = 100;
pub const DEFAULT_EVAL_EPISODES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    TrainTeacher,
    GenData,
    Distill,
    TrainMultitask,
    Eval,
    Heatmap,
    ExportEmbeddings,
    Transfer,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::TrainTeacher => "train-teacher",
            Kind::GenData => "gen-data",
            Kind::Distill => "distill",
            Kind::TrainMultitask => "train-multitask",
            Kind::Eval => "eval",
            Kind::Heatmap => "heatmap",
            Kind::ExportEmbeddings => "export-embeddings",
            Kind::Transfer => "transfer",
        }
    }
}

/// Everything needed to run one experiment. Fields a kind does not use
/// are ignored by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Game documents: file paths or bundled ids such as `game1`.
    pub games: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Environment steps (DQN kinds).
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Passes over the stores (distillation).
    #[serde(default = "default_epochs")]
    pub epochs: u64,
    #[serde(default)]
    pub stores: Vec<PathBuf>,
    /// Checkpoint to read: the teacher for `gen-data`, the analysed model
    /// for `eval`, `heatmap` and `export-embeddings`.
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Embedding donors for `transfer`.
    #[serde(default)]
    pub sources: Vec<PathBuf>,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default = "default_true")]
    pub freeze: bool,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_epsilon_gen")]
    pub epsilon_gen: f64,
    #[serde(default = "default_eval_episodes")]
    pub episodes: usize,
    #[serde(default = "default_d1")]
    pub d1: usize,
    #[serde(default)]
    pub hyper: HyperParams,
}

fn default_budget() -> u64 {
    DEFAULT_TEACHER_BUDGET
}
fn default_epochs() -> u64 {
    DEFAULT_EPOCHS
}
fn default_true() -> bool {
    true
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_epsilon_gen() -> f64 {
    DEFAULT_EPSILON_GEN
}
fn default_eval_episodes() -> usize {
    DEFAULT_EVAL_EPISODES
}
fn default_d1() -> usize {
    DEFAULT_D1
}

impl ExperimentConfig {
    /// Merge `flags` over the JSON file at `file` (if any) and validate.
    /// Objects merge key by key, so a flag overrides one hyperparameter
    /// without resetting the others from the file.
    pub fn resolve(file: Option<&Path>, flags: Map<String, Value>) -> Result<Self, Failure> {
        let mut base = match file {
            None => Value::Object(Map::new()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", p.display())))?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| Failure::Config(format!("config {}: {e}", p.display())))?;
                if !v.is_object() {
                    return Err(Failure::Config(format!("config {} is not a JSON object", p.display())));
                }
                v
            }
        };
        merge(&mut base, Value::Object(flags));
        let cfg: Self = serde_json::from_value(base).map_err(|e| Failure::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        self.hyper.validate().map_err(|e| Failure::Config(e.to_string()))?;
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Failure::Config(msg.to_owned())) };
        need(!self.games.is_empty(), "no games given")?;
        need(self.d1 > 0 && self.episodes > 0, "d1 and episodes must be positive")?;
        need((0.0..=1.0).contains(&self.epsilon_gen), "epsilon_gen must lie in [0, 1]")?;
        match self.kind {
            Kind::TrainTeacher | Kind::GenData => need(self.games.len() == 1, "expects exactly one game")?,
            Kind::Distill => need(
                self.stores.len() == self.games.len(),
                "distill needs one store per game",
            )?,
            Kind::Transfer => {
                need(self.games.len() == 1, "transfer expects exactly one target game")?;
                need(self.mode.is_some(), "transfer needs a mode (A1..A6)")?;
            }
            _ => {}
        }
        if matches!(self.kind, Kind::GenData | Kind::Eval | Kind::Heatmap | Kind::ExportEmbeddings) {
            need(self.model.is_some(), "this command needs a model checkpoint")?;
        }
        if self.kind == Kind::Heatmap {
            need(self.games.len() == 2, "heatmap compares exactly two games")?;
        }
        Ok(())
    }

    /// Output directory: `out`, else `$TGPD_OUT/<kind>-seed<seed>`, else
    /// `runs/<kind>-seed<seed>`.
    pub fn out_dir(&self) -> PathBuf {
        if let Some(o) = &self.out {
            return o.clone();
        }
        let root = std::env::var_os("TGPD_OUT").map_or_else(|| PathBuf::from("runs"), PathBuf::from);
        root.join(format!("{}-seed{}", self.kind.name(), self.seed))
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}
