use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Kind};
use crate::manifest::RunManifest;
use crate::Failure;

#[derive(Parser, Debug)]
#[command(name = "tgpd", version, about = "Multi-task policy distillation for text-based games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a single-game LSTM-DQN teacher.
    TrainTeacher {
        #[arg(long)]
        game: Option<String>,
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Record a teacher's Q-values on its own game into a store file.
    GenData {
        #[arg(long)]
        game: Option<String>,
        /// Teacher checkpoint.
        #[arg(long)]
        teacher: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        /// Teacher exploration rate while recording.
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Distill per-game stores into one multi-controller student.
    Distill {
        #[arg(long, value_delimiter = ',')]
        games: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        stores: Vec<PathBuf>,
        #[arg(long)]
        d1: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        epochs: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Train the multi-task LSTM-DQN baseline.
    TrainMultitask {
        #[arg(long, value_delimiter = ',')]
        games: Vec<String>,
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint on one or more games.
    Eval {
        #[arg(long, value_delimiter = ',')]
        games: Vec<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Mean-jacobian heat maps of two games and their differences.
    Heatmap {
        #[arg(long, value_delimiter = ',')]
        games: Vec<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write per-word LSTM outputs for each game's vocabulary.
    ExportEmbeddings {
        #[arg(long, value_delimiter = ',')]
        games: Vec<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train an agent on a new game starting from transferred embeddings.
    Transfer {
        #[arg(long)]
        target: Option<String>,
        /// A1..A6.
        #[arg(long)]
        mode: Option<String>,
        /// Donor checkpoints (several for A6).
        #[arg(long, value_delimiter = ',')]
        source: Vec<PathBuf>,
        /// Keep transferred rows fixed during training.
        #[arg(long)]
        freeze: Option<bool>,
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        /// Write to this directory instead of the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $TGPD_OUT/<command>-seed<seed>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    d_emb: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    eval_interval: Option<u64>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    #[arg(long)]
    train_every: Option<u64>,
}

pub enum Parsed {
    Run(ExperimentConfig),
    Help(String),
}

pub fn parse<I, T>(argv: I) -> Result<Parsed, Failure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return Ok(Parsed::Help(e.render().to_string()));
        }
        Err(e) => return Err(Failure::Usage(e.render().to_string())),
    };
    let mut flags = Map::new();
    let mut put = |k: &str, v: Value| {
        flags.insert(k.to_owned(), v);
    };
    let (kind, common) = match cli.command {
        Command::Rerun { manifest, out } => {
            let mut cfg = RunManifest::load(&manifest)?.config;
            if out.is_some() {
                cfg.out = out;
            }
            cfg.validate()?;
            return Ok(Parsed::Run(cfg));
        }
        Command::TrainTeacher { game, budget, common } => {
            opt(&mut put, "games", game.map(|g| vec![g]));
            opt(&mut put, "budget", budget);
            (Kind::TrainTeacher, common)
        }
        Command::GenData {
            game,
            teacher,
            samples,
            epsilon,
            common,
        } => {
            opt(&mut put, "games", game.map(|g| vec![g]));
            opt(&mut put, "model", teacher);
            opt(&mut put, "samples", samples);
            opt(&mut put, "epsilon_gen", epsilon);
            (Kind::GenData, common)
        }
        Command::Distill {
            games,
            stores,
            d1,
            tau,
            epochs,
            common,
        } => {
            list(&mut put, "games", games);
            list(&mut put, "stores", stores);
            opt(&mut put, "d1", d1);
            opt(&mut put, "epochs", epochs);
            if let Some(t) = tau {
                put("hyper", json!({ "tau": t }));
            }
            (Kind::Distill, common)
        }
        Command::TrainMultitask { games, budget, common } => {
            list(&mut put, "games", games);
            opt(&mut put, "budget", budget);
            (Kind::TrainMultitask, common)
        }
        Command::Eval {
            games,
            model,
            episodes,
            common,
        } => {
            list(&mut put, "games", games);
            opt(&mut put, "model", model);
            opt(&mut put, "episodes", episodes);
            (Kind::Eval, common)
        }
        Command::Heatmap { games, model, common } => {
            list(&mut put, "games", games);
            opt(&mut put, "model", model);
            (Kind::Heatmap, common)
        }
        Command::ExportEmbeddings { games, model, common } => {
            list(&mut put, "games", games);
            opt(&mut put, "model", model);
            (Kind::ExportEmbeddings, common)
        }
        Command::Transfer {
            target,
            mode,
            source,
            freeze,
            budget,
            common,
        } => {
            opt(&mut put, "games", target.map(|g| vec![g]));
            opt(&mut put, "mode", mode);
            list(&mut put, "sources", source);
            opt(&mut put, "freeze", freeze);
            opt(&mut put, "budget", budget);
            (Kind::Transfer, common)
        }
    };
    put("kind", json!(kind));
    opt(&mut put, "seed", common.seed);
    opt(&mut put, "out", common.out);
    let mut hyper = match flags.remove("hyper") {
        Some(Value::Object(m)) => m,
        _ => Map::new(),
    };
    let mut hp = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            hyper.insert(k.to_owned(), v);
        }
    };
    hp("lr", common.lr.map(Value::from));
    hp("gamma", common.gamma.map(Value::from));
    hp("hidden", common.hidden.map(Value::from));
    hp("d_emb", common.d_emb.map(Value::from));
    hp("batch_size", common.batch_size.map(Value::from));
    hp("eval_interval", common.eval_interval.map(Value::from));
    hp("eval_episodes", common.eval_episodes.map(Value::from));
    hp("train_every", common.train_every.map(Value::from));
    if !hyper.is_empty() {
        flags.insert("hyper".into(), Value::Object(hyper));
    }
    if let Some(path) = &common.config {
        check_kind(path, kind)?;
    }
    ExperimentConfig::resolve(common.config.as_deref(), flags).map(Parsed::Run)
}

fn opt<T: serde::Serialize>(put: &mut impl FnMut(&str, Value), key: &str, v: Option<T>) {
    if let Some(v) = v {
        put(key, json!(v));
    }
}

fn list<T: serde::Serialize>(put: &mut impl FnMut(&str, Value), key: &str, v: Vec<T>) {
    if !v.is_empty() {
        put(key, json!(v));
    }
}

/// A config file naming a different experiment is almost certainly a mistake.
fn check_kind(path: &std::path::Path, kind: Kind) -> Result<(), Failure> {
    let Ok(text) = std::fs::read_to_string(path) else {
        return Ok(()); // reported with context by `resolve`
    };
    let Ok(Value::Object(m)) = serde_json::from_str::<Value>(&text) else {
        return Ok(());
    };
    match m.get("kind") {
        Some(k) if *k != json!(kind) => Err(Failure::Config(format!(
            "config {} is for {k}, not {}",
            path.display(),
            kind.name()
        ))),
        _ => Ok(()),
    }
}
