//! The `tgpd` binary end to end on tiny budgets.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tgpd_cli::RunManifest;

const SMALL: [&str; 8] = ["--hidden", "8", "--d-emb", "5", "--eval-interval", "200", "--eval-episodes", "5"];

fn tgpd(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tgpd"));
    cmd.args(args).env_remove("TGPD_OUT");
    if let Some(dir) = env_out {
        cmd.env("TGPD_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> RunManifest {
    let o = tgpd(args, None);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let path = PathBuf::from(String::from_utf8(o.stdout).unwrap().trim());
    RunManifest::load(&path).unwrap()
}

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(SMALL).collect()
}

fn teacher(dir: &Path, seed: &str) -> RunManifest {
    let out = dir.join(format!("teacher{seed}"));
    ok(&with_small(&[
        "train-teacher",
        "--game",
        "game1",
        "--budget",
        "800",
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ]))
}

#[test]
fn help_and_usage_errors() {
    let o = tgpd(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("train-teacher"));
    assert_eq!(tgpd(&["bogus"], None).status.code(), Some(1));
    assert_eq!(tgpd(&[], None).status.code(), Some(1));
    assert_eq!(tgpd(&["train-teacher", "--budget", "ten"], None).status.code(), Some(1));
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    // Unknown game, missing game, heatmap over one game, missing mode.
    for args in [
        vec!["train-teacher", "--game", "game9", "--out", out],
        vec!["train-teacher", "--out", out],
        vec!["heatmap", "--games", "game1", "--model", "m.tgpd", "--out", out],
        vec!["transfer", "--target", "game5", "--out", out],
        vec!["train-teacher", "--game", "game1", "--gamma", "1.5", "--out", out],
    ] {
        let o = tgpd(&args, None);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn config_files_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"kind": "train-teacher", "games": ["game1"], "budgt": 10}"#).unwrap();
    let o = tgpd(&["train-teacher", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budgt"));

    fs::write(&cfg, r#"{"kind": "train-teacher", "games": ["game1"], "hyper": {"lrr": 1.0}}"#).unwrap();
    assert_eq!(tgpd(&["train-teacher", "--config", cfg.to_str().unwrap()], None).status.code(), Some(1));

    // A config written for another subcommand is refused.
    fs::write(&cfg, r#"{"kind": "distill", "games": ["game1"]}"#).unwrap();
    assert_eq!(tgpd(&["train-teacher", "--config", cfg.to_str().unwrap()], None).status.code(), Some(1));
}

#[test]
fn flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"kind": "train-teacher", "games": ["game2"], "budget": 300, "seed": 4,
            "hyper": {"hidden": 6, "d_emb": 4, "gamma": 0.3, "eval_interval": 100, "eval_episodes": 2}}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let m = ok(&[
        "train-teacher",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--gamma",
        "0.7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(m.config.seed, 9);
    assert_eq!(m.config.budget, 300);
    assert_eq!(m.config.hyper.gamma, 0.7);
    // Untouched nested keys keep the file's values.
    assert_eq!(m.config.hyper.hidden, 6);
    assert_eq!(m.config.games, vec!["game2".to_string()]);
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_small(&["train-teacher", "--game", "game1", "--budget", "100", "--seed", "5"]);
    let o = tgpd(&args, Some(dir.path()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("train-teacher-seed5").join("manifest.json").is_file());
}

#[test]
fn pipeline_and_bitwise_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let t = teacher(dir.path(), "1");
    let ckpt = t.outputs["checkpoint"].clone();
    let log = fs::read(&t.outputs["log"]).unwrap();
    assert!(String::from_utf8_lossy(&log).starts_with("step,"));

    // Re-running the recorded manifest elsewhere reproduces log and weights.
    let again = dir.path().join("rerun");
    let r = ok(&[
        "rerun",
        t.path.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&r.outputs["log"]).unwrap(), log);
    assert_eq!(fs::read(&r.outputs["checkpoint"]).unwrap(), fs::read(&ckpt).unwrap());
    assert_eq!(r.metrics, t.metrics);

    let data = ok(&with_small(&[
        "gen-data",
        "--game",
        "game1",
        "--teacher",
        ckpt.to_str().unwrap(),
        "--samples",
        "200",
        "--out",
        dir.path().join("data").to_str().unwrap(),
    ]));
    let store = data.outputs["store"].clone();
    assert_eq!(data.metrics["samples"], 200.0);

    let student = ok(&with_small(&[
        "distill",
        "--games",
        "game1",
        "--stores",
        store.to_str().unwrap(),
        "--d1",
        "7",
        "--epochs",
        "2",
        "--out",
        dir.path().join("student").to_str().unwrap(),
    ]));
    let model = student.outputs["checkpoint"].clone();

    let e = ok(&with_small(&[
        "eval",
        "--games",
        "game1",
        "--model",
        model.to_str().unwrap(),
        "--episodes",
        "4",
        "--out",
        dir.path().join("eval").to_str().unwrap(),
    ]));
    let csv = fs::read_to_string(&e.outputs["eval"]).unwrap();
    assert!(csv.starts_with("game_id,avg_reward,quest_completion,episodes\ngame1,"));

    let emb = ok(&with_small(&[
        "export-embeddings",
        "--games",
        "game1",
        "--model",
        model.to_str().unwrap(),
        "--out",
        dir.path().join("emb").to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&emb.outputs["embeddings_game1"]).unwrap();
    assert!(text.starts_with("word,game_id,h_1,"));

    // The single-game teacher cannot be read as a model of two games.
    let o = tgpd(
        &with_small(&[
            "eval",
            "--games",
            "game1,game2",
            "--model",
            ckpt.to_str().unwrap(),
            "--out",
            dir.path().join("bad").to_str().unwrap(),
        ]),
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("heads.game2"));
}

#[test]
fn transfer_and_heatmap_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let t = teacher(dir.path(), "2");
    let ckpt = t.outputs["checkpoint"].clone();
    let tr = ok(&with_small(&[
        "transfer",
        "--target",
        "game5",
        "--mode",
        "a1",
        "--source",
        ckpt.to_str().unwrap(),
        "--budget",
        "300",
        "--out",
        dir.path().join("transfer").to_str().unwrap(),
    ]));
    assert!(tr.metrics["copied_words"] > 0.0);
    assert!(fs::read_to_string(&tr.outputs["transfer"]).unwrap().starts_with("source,word\n"));

    let mt = ok(&with_small(&[
        "train-multitask",
        "--games",
        "game1,game4",
        "--budget",
        "300",
        "--out",
        dir.path().join("mt").to_str().unwrap(),
    ]));
    let hm = ok(&with_small(&[
        "heatmap",
        "--games",
        "game1,game4",
        "--model",
        mt.outputs["checkpoint"].to_str().unwrap(),
        "--out",
        dir.path().join("hm").to_str().unwrap(),
    ]));
    let pgm = fs::read(&hm.outputs["heatmap_game4_relu_meanpool.pgm"]).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
    for label in ["relu_meanpool", "action_relu", "object_relu"] {
        assert!(hm.metrics[&format!("diff.{label}")] >= 0.0);
    }
}
