//! One function per subcommand. Each writes its artefacts into the output
//! directory and returns the finished manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use tgpd_core::agent::{evaluate, new_teacher, run_dqn, train_teacher, DqnGame, TokenMap, TrainingLog};
use tgpd_core::analysis::{
    export_word_embeddings, heatmap_mean_abs_diff, mean_jacobian, sample_states, to_heatmap, transfer_initialize,
    EmbeddingSource, HeatMap, LayerPair, TransferMode, TransferPlan, HEATMAP_EPSILON, HEATMAP_STATES,
};
use tgpd_core::distill::{
    generate_teacher_data, new_student, train_multitask_lstm_dqn, train_student, GameStore, MultiGameModel,
    TeacherStore,
};
use tgpd_core::env::{GameSpec, Vocabulary};
use tgpd_core::nn::{write_atomic, Checkpoint};
use tgpd_core::rng::{self, Stream};

use crate::config::{ExperimentConfig, Kind};
use crate::games::load_game;
use crate::manifest::RunManifest;
use crate::Failure;

pub const CHECKPOINT_FILE: &str = "model.tgpd";
pub const LOG_FILE: &str = "log.csv";

pub fn execute(cfg: &ExperimentConfig) -> Result<RunManifest, Failure> {
    cfg.validate()?;
    let specs = cfg
        .games
        .iter()
        .map(|g| load_game(g))
        .collect::<Result<Vec<_>, _>>()?;
    let specs: Vec<&GameSpec> = specs.iter().collect();
    let out = cfg.out_dir();
    fs::create_dir_all(&out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let mut m = RunManifest::new(cfg.clone());
    match cfg.kind {
        Kind::TrainTeacher => train_teacher_cmd(cfg, specs[0], &out, &mut m)?,
        Kind::GenData => gen_data(cfg, specs[0], &out, &mut m)?,
        Kind::Distill => distill(cfg, &specs, &out, &mut m)?,
        Kind::TrainMultitask => multitask(cfg, &specs, &out, &mut m)?,
        Kind::Eval => eval(cfg, &specs, &out, &mut m)?,
        Kind::Heatmap => heatmap(cfg, &specs, &out, &mut m)?,
        Kind::ExportEmbeddings => embeddings(cfg, &specs, &out, &mut m)?,
        Kind::Transfer => transfer(cfg, specs[0], &out, &mut m)?,
    }
    m.finish(&out)
}

fn runtime(context: &Path) -> impl Fn(tgpd_core::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", context.display()))
}

fn save_model(model: &MultiGameModel, out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let p = out.join(CHECKPOINT_FILE);
    model.save(&p).map_err(runtime(&p))?;
    m.outputs.insert("checkpoint".into(), p);
    Ok(())
}

fn save_log(log: &TrainingLog, out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let p = out.join(LOG_FILE);
    log.write_csv(&p).map_err(runtime(&p))?;
    m.outputs.insert("log".into(), p);
    for game in m.config.games.clone() {
        let id = load_game(&game)?.game_id;
        if let Some(row) = log.last(&id) {
            m.metrics.insert(format!("{id}.avg_reward"), row.avg_reward);
            m.metrics.insert(format!("{id}.quest_completion"), row.quest_completion);
        }
    }
    Ok(())
}

fn load_model(path: &Path, specs: &[&GameSpec]) -> Result<MultiGameModel, Failure> {
    MultiGameModel::load(path, specs).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn train_teacher_cmd(cfg: &ExperimentConfig, spec: &GameSpec, out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let (net, log) = train_teacher::<f32>(spec, &cfg.hyper, cfg.seed, cfg.budget)?;
    save_model(&MultiGameModel::from_teacher(net, spec), out, m)?;
    save_log(&log, out, m)
}

/// Store file name for a game.
pub fn store_file(game_id: &str) -> String {
    format!("{game_id}.tgds")
}

fn gen_data(cfg: &ExperimentConfig, spec: &GameSpec, out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let teacher = load_model(cfg.model.as_deref().expect("validated"), &[spec])?;
    if teacher.net.heads().len() != 1 || teacher.token_maps[0] != TokenMap::identity() {
        return Err(Failure::Config(format!(
            "{} is not a single-game teacher for {}",
            cfg.model.as_ref().expect("validated").display(),
            spec.game_id
        )));
    }
    let store = generate_teacher_data(&teacher.net, spec, cfg.samples, cfg.epsilon_gen, cfg.seed)?;
    let p = out.join(store_file(&spec.game_id));
    store.save(&p).map_err(runtime(&p))?;
    m.outputs.insert("store".into(), p);
    m.metrics.insert("samples".into(), store.len() as f64);
    Ok(())
}

fn distill(cfg: &ExperimentConfig, specs: &[&GameSpec], out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let mut games = Vec::new();
    for (spec, path) in specs.iter().zip(&cfg.stores) {
        let s = GameStore::load(path).map_err(runtime(path))?;
        s.validate(spec).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        games.push(s);
    }
    let store = TeacherStore { games };
    let student = new_student(specs, &cfg.hyper, cfg.d1, cfg.seed)?;
    let (student, log, stats) = train_student(&store, student, specs, &cfg.hyper, cfg.seed, cfg.epochs)?;
    m.metrics.insert("updates".into(), stats.updates as f64);
    save_model(&student, out, m)?;
    save_log(&log, out, m)
}

fn multitask(cfg: &ExperimentConfig, specs: &[&GameSpec], out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let (model, log) = train_multitask_lstm_dqn(specs, &cfg.hyper, cfg.seed, cfg.budget)?;
    save_model(&model, out, m)?;
    save_log(&log, out, m)
}

fn eval(cfg: &ExperimentConfig, specs: &[&GameSpec], out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let model = load_model(cfg.model.as_deref().expect("validated"), specs)?;
    let mut csv = String::from("game_id,avg_reward,quest_completion,episodes\n");
    let seed = {
        use rand::Rng as _;
        rng::stream(cfg.seed, Stream::Eval).gen::<u64>()
    };
    for spec in specs {
        let head = model.head(&spec.game_id)?;
        let e = evaluate(
            &model.net,
            head,
            &model.token_maps[head],
            spec,
            cfg.episodes,
            seed,
            cfg.hyper.eval_epsilon,
        )?;
        let _ = writeln!(csv, "{},{:.6},{:.6},{}", spec.game_id, e.avg_reward, e.quest_completion, e.episodes);
        m.metrics.insert(format!("{}.avg_reward", spec.game_id), e.avg_reward);
        m.metrics.insert(format!("{}.quest_completion", spec.game_id), e.quest_completion);
    }
    let p = out.join("eval.csv");
    write_atomic(&p, csv.as_bytes()).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
    m.outputs.insert("eval".into(), p);
    Ok(())
}

/// The three layer pairs in reporting order.
pub const HEATMAP_PAIRS: [LayerPair; 3] = [LayerPair::RELU_MEAN_POOL, LayerPair::ACTION_RELU, LayerPair::OBJECT_RELU];

/// Heat maps of `model` on `spec` for every pair, from 100 sampled states.
pub fn game_heatmaps(model: &MultiGameModel, spec: &GameSpec, seed: u64) -> Result<Vec<HeatMap>, tgpd_core::Error> {
    let head = model.head(&spec.game_id)?;
    let states = sample_states(
        &model.net,
        head,
        &model.token_maps[head],
        spec,
        HEATMAP_STATES,
        HEATMAP_EPSILON,
        seed,
    )?;
    HEATMAP_PAIRS
        .iter()
        .map(|&pair| to_heatmap(mean_jacobian(&model.net, head, &states, pair)?))
        .collect()
}

fn heatmap(cfg: &ExperimentConfig, specs: &[&GameSpec], out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let model = load_model(cfg.model.as_deref().expect("validated"), specs)?;
    let mut maps = Vec::new();
    for spec in specs {
        let hm = game_heatmaps(&model, spec, cfg.seed)?;
        for (pair, h) in HEATMAP_PAIRS.iter().zip(&hm) {
            let stem = format!("heatmap_{}_{}", spec.game_id, pair.label());
            for (ext, write) in [("csv", HeatMap::write_csv as fn(&HeatMap, &Path) -> _), ("pgm", HeatMap::write_pgm)] {
                let p = out.join(format!("{stem}.{ext}"));
                write(h, &p).map_err(runtime(&p))?;
                m.outputs.insert(format!("{stem}.{ext}"), p);
            }
        }
        maps.push(hm);
    }
    let (a, b) = (specs[0], specs[1]);
    let mut csv = String::from("pair,game_a,game_b,mean_abs_diff\n");
    for (i, pair) in HEATMAP_PAIRS.iter().enumerate() {
        let d = heatmap_mean_abs_diff(&maps[0][i], &maps[1][i])?;
        let _ = writeln!(csv, "{},{},{},{d:.6}", pair.label(), a.game_id, b.game_id);
        m.metrics.insert(format!("diff.{}", pair.label()), d);
    }
    let p = out.join("heatmap_diff.csv");
    write_atomic(&p, csv.as_bytes()).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
    m.outputs.insert("heatmap_diff".into(), p);
    Ok(())
}

fn embeddings(cfg: &ExperimentConfig, specs: &[&GameSpec], out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let model = load_model(cfg.model.as_deref().expect("validated"), specs)?;
    for spec in specs {
        let head = model.head(&spec.game_id)?;
        let p = out.join(format!("embeddings_{}.csv", spec.game_id));
        export_word_embeddings(&model.net, spec, &model.token_maps[head], &p).map_err(runtime(&p))?;
        m.outputs.insert(format!("embeddings_{}", spec.game_id), p);
    }
    Ok(())
}

/// Donor embeddings read straight from a checkpoint.
pub struct Donor {
    pub name: String,
    pub vocab: Vocabulary,
    pub embedding: tgpd_core::nn::Tensor<f32>,
}

impl Donor {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let ckpt = Checkpoint::load(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        let embedding = ckpt
            .array(tgpd_core::agent::EMBEDDING)
            .cloned()
            .ok_or_else(|| Failure::Runtime(format!("{} has no embedding table", path.display())))?;
        Ok(Self {
            name: path.display().to_string(),
            vocab: Vocabulary::from_words(ckpt.vocab.iter().cloned()),
            embedding,
        })
    }

    pub fn source(&self) -> EmbeddingSource<'_> {
        EmbeddingSource {
            name: &self.name,
            vocab: &self.vocab,
            embedding: &self.embedding,
        }
    }
}

fn transfer(cfg: &ExperimentConfig, spec: &GameSpec, out: &Path, m: &mut RunManifest) -> Result<(), Failure> {
    let mode: TransferMode = cfg.mode.as_deref().expect("validated").parse()?;
    let donors = cfg.sources.iter().map(|p| Donor::load(p)).collect::<Result<Vec<_>, _>>()?;
    let plan = TransferPlan {
        mode,
        sources: donors.iter().map(Donor::source).collect(),
        freeze: cfg.freeze,
    };
    let mut net = new_teacher::<f32>(spec, &cfg.hyper, cfg.seed)?;
    let report = transfer_initialize(&plan, &mut net, &spec.vocab, cfg.seed)?;
    let mut csv = String::from("source,word\n");
    for (source, words) in &report.copied {
        for w in words {
            let _ = writeln!(csv, "{source},{w}");
        }
    }
    let p = out.join("transfer.csv");
    write_atomic(&p, csv.as_bytes()).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
    m.outputs.insert("transfer".into(), p);
    m.metrics.insert("copied_words".into(), report.total_copied() as f64);

    let games = [DqnGame {
        spec,
        head: 0,
        tokens: TokenMap::identity(),
    }];
    let (net, log, _) = run_dqn(net, &games, &cfg.hyper, cfg.seed, cfg.budget)?;
    if let Some(step) = log.first_step_reaching(&spec.game_id, 0.9) {
        m.metrics.insert("steps_to_0.90".into(), step as f64);
    }
    save_model(&MultiGameModel::from_teacher(net, spec), out, m)?;
    save_log(&log, out, m)
}

/// Paths a run wrote, for callers chaining commands.
pub fn output(m: &RunManifest, name: &str) -> Option<PathBuf> {
    m.outputs.get(name).cloned()
}
