use std::collections::HashSet;

use super::*;
use crate::agent::{greedy_command, new_teacher, train_teacher, HyperParams};
use crate::env::{bundled_game, GameSpec};
use crate::nn::{kl_value, softmax_t, Tape, Tensor};
use crate::rng::{stream, Stream};
use crate::Error;
use rand::Rng;

fn small_hp() -> HyperParams {
    HyperParams {
        d_emb: 6,
        hidden: 10,
        linear1: 10,
        batch_size: 8,
        eval_interval: 1_000_000,
        eval_episodes: 4,
        ..HyperParams::default()
    }
}

#[test]
fn union_vocab_is_sorted_and_injective() {
    let (g1, g2) = (bundled_game("game1").unwrap(), bundled_game("game2").unwrap());
    let u = UnionVocab::new(&[&g1, &g2]).unwrap();
    let words = u.vocab().words();
    assert!(words.windows(2).all(|w| w[0] < w[1]));
    for g in [&g1, &g2] {
        let map = u.token_map(&g.game_id).unwrap();
        let ids = map.apply(&(0..g.vocab.len() as u32).collect::<Vec<_>>());
        assert_eq!(ids.iter().collect::<HashSet<_>>().len(), g.vocab.len());
        for (local, &global) in ids.iter().enumerate() {
            assert_eq!(words[global as usize], g.vocab.words()[local]);
        }
        let mask = u.mask(&g.game_id).unwrap();
        assert_eq!(mask.iter().filter(|&&m| m).count(), g.vocab.len());
    }
    let shared = u.vocab().get("kitchen").unwrap();
    assert!(u.mask("game1").unwrap()[shared as usize] && u.mask("game2").unwrap()[shared as usize]);
    assert!(matches!(u.mask("game9"), Err(Error::UnknownGame(_))));
    assert!(UnionVocab::new(&[&g1, &g1]).is_err());
}

fn sample_store() -> GameStore {
    GameStore {
        game_id: "game1".into(),
        n_actions: 2,
        n_objects: 3,
        samples: vec![
            DistillSample {
                tokens: vec![4, 0, 7],
                q_action: vec![0.5, -1.25],
                q_object: vec![1e-8, f32::MAX, -0.0],
            },
            DistillSample {
                tokens: vec![1],
                q_action: vec![2.0, 3.0],
                q_object: vec![0.1, 0.2, 0.3],
            },
        ],
    }
}

#[test]
fn store_file_round_trips_and_rejects_damage() {
    let s = sample_store();
    let bytes = s.to_bytes();
    assert_eq!(&bytes[..4], b"TGDS");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), STORE_VERSION);
    let back = GameStore::from_bytes(&bytes).unwrap();
    assert_eq!(back.game_id, s.game_id);
    for (a, b) in back.samples.iter().zip(&s.samples) {
        assert_eq!(a.tokens, b.tokens);
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.q_action), bits(&b.q_action));
        assert_eq!(bits(&a.q_object), bits(&b.q_object));
    }
    for cut in 0..bytes.len() {
        assert!(GameStore::from_bytes(&bytes[..cut]).is_err(), "prefix {cut} accepted");
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(GameStore::from_bytes(&bad).is_err());
    let mut long = bytes;
    long.push(0);
    assert!(GameStore::from_bytes(&long).is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g1.tgds");
    s.save(&path).unwrap();
    assert_eq!(GameStore::load(&path).unwrap(), s);
}

#[test]
fn store_validation_catches_mismatches() {
    let g1 = bundled_game("game1").unwrap();
    let mut s = sample_store();
    assert!(s.validate(&g1).is_err());
    s.n_actions = g1.actions.len();
    s.n_objects = g1.objects.len();
    for x in &mut s.samples {
        x.q_action = vec![0.0; s.n_actions];
        x.q_object = vec![0.0; s.n_objects];
    }
    s.validate(&g1).unwrap();
    s.samples[0].tokens.push(10_000);
    assert!(s.validate(&g1).is_err());
}

#[test]
fn generated_samples_record_teacher_scores_exactly() {
    let spec = bundled_game("game1").unwrap();
    let teacher = new_teacher::<f32>(&spec, &small_hp(), 5).unwrap();
    assert!(generate_teacher_data(&teacher, &spec, 0, 0.05, 1).unwrap().is_empty());
    let store = generate_teacher_data(&teacher, &spec, 200, 0.05, 1).unwrap();
    assert_eq!(store.len(), 200);
    for s in &store.samples {
        let (qa, qo) = teacher.q_values(&s.tokens, 0).unwrap();
        assert_eq!(qa, s.q_action);
        assert_eq!(qo, s.q_object);
    }
    let again = generate_teacher_data(&teacher, &spec, 200, 0.05, 1).unwrap();
    assert_eq!(store, again);
}

#[test]
fn teacher_rollout_visits_every_start() {
    let spec = bundled_game("game1").unwrap();
    let teacher = new_teacher::<f32>(&spec, &small_hp(), 5).unwrap();
    let mut rollout = TeacherRollout::new(&teacher, &spec, 0.05, 9).unwrap();
    let mut starts = HashSet::new();
    for _ in 0..5000 {
        let (state, _) = rollout.next_sample().unwrap();
        if state.steps_taken == 0 {
            starts.insert((state.room, state.quest));
        }
    }
    assert_eq!(starts.len(), 16);
}

#[test]
fn trunk_is_shared_and_heads_are_disjoint() {
    let (g1, g4) = (bundled_game("game1").unwrap(), bundled_game("game4").unwrap());
    let mut model = new_student(&[&g1, &g4], &small_hp(), 7, 0).unwrap();
    let tokens: &[u32] = &[3, 8, 1, 20];
    let run = |m: &MultiGameModel, head| {
        let mut tape = Tape::new();
        let f = m.net.forward(&mut tape, &[tokens], head).unwrap();
        let bits = |n| tape.value(n).data().iter().map(|v: &f32| v.to_bits()).collect::<Vec<_>>();
        (bits(f.relu), tape.value(f.q_action).clone(), tape.value(f.q_object).clone())
    };
    let (r1, a1, o1) = run(&model, 0);
    let (r4, a4, o4) = run(&model, 1);
    assert_eq!(r1, r4);
    assert_ne!(a1.data(), a4.data());
    assert_eq!(a1.len(), g1.actions.len());
    assert_eq!(o4.len(), g4.objects.len());
    let _ = o1;

    let [(aw, _), _] = model.net.head_ids(0);
    model.net.params.get_mut(aw).value.fill(0.3);
    let (_, a4b, o4b) = run(&model, 1);
    assert_eq!(a4.data(), a4b.data());
    assert_eq!(o4.data(), o4b.data());
    assert!(matches!(model.head("game9"), Err(Error::UnknownGame(_))));
}

#[test]
fn distill_loss_is_zero_at_matching_logits() {
    let tau = 0.5;
    let ta = Tensor::matrix(1, 3, vec![1.0, -2.0, 0.5]).unwrap();
    let to = Tensor::matrix(1, 2, vec![0.0, 4.0]).unwrap();
    let mut tape = Tape::<f64>::new();
    let sa = tape.input(Tensor::matrix(1, 3, ta.data().iter().map(|v| v / tau).collect()).unwrap()).unwrap();
    let so = tape.input(Tensor::matrix(1, 2, to.data().iter().map(|v| v / tau).collect()).unwrap()).unwrap();
    let l = distill_loss(&mut tape, &ta, &to, sa, so, tau).unwrap();
    assert!(tape.value(l).data()[0].abs() < 1e-12);
}

#[test]
fn distill_loss_single_head_example() {
    // Teacher [1, 0] at τ = 0.5 against a uniform student.
    let p = softmax_t(&[1.0f64, 0.0], 0.5).unwrap();
    let v = kl_value(&p, &[0.0, 0.0]);
    assert!((v - 0.327_813_325).abs() < 1e-8);
}

#[test]
fn distill_loss_is_non_negative() {
    let mut rng = stream(2, Stream::Analysis);
    for _ in 0..1000 {
        let (na, no) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let mut r = |n| Tensor::matrix(1, n, (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
        let (ta, to, sa, so) = (r(na), r(no), r(na), r(no));
        let tau = [0.01, 0.1, 1.0][rng.gen_range(0..3)];
        let mut tape = Tape::<f64>::new();
        let (sa, so) = (tape.input(sa).unwrap(), tape.input(so).unwrap());
        let l = distill_loss(&mut tape, &ta, &to, sa, so, tau).unwrap();
        assert!(tape.value(l).data()[0] >= -1e-12);
    }
}

#[test]
fn lower_temperature_sharpens_targets() {
    let q = [0.3, 0.9, 0.5, -0.2];
    let mass: Vec<f64> = [1.0, 0.1, 0.01]
        .iter()
        .map(|&tau| softmax_t(&q, tau).unwrap()[1])
        .collect();
    assert!(mass[0] < mass[1] && mass[1] < mass[2]);
    assert!(mass[2] > 0.999);
}

fn teacher_store(spec: &GameSpec, hp: &HyperParams, seed: u64, n: usize) -> (crate::agent::QNet<f32>, GameStore) {
    let teacher = new_teacher::<f32>(spec, hp, seed).unwrap();
    let store = generate_teacher_data(&teacher, spec, n, 0.2, seed).unwrap();
    (teacher, store)
}

#[test]
fn round_robin_gives_each_game_equal_minibatches() {
    let (g1, g2, g4) = (
        bundled_game("game1").unwrap(),
        bundled_game("game2").unwrap(),
        bundled_game("game4").unwrap(),
    );
    let hp = small_hp();
    let store = TeacherStore {
        games: vec![
            teacher_store(&g1, &hp, 1, 40).1,
            teacher_store(&g2, &hp, 2, 100).1,
            teacher_store(&g4, &hp, 3, 7).1,
        ],
    };
    let specs = [&g1, &g2, &g4];
    let model = new_student(&specs, &hp, 8, 0).unwrap();
    let (_, _, stats) = train_student(&store, model, &specs, &hp, 0, 2).unwrap();
    // The largest store needs ceil(100 / 8) = 13 minibatches per epoch.
    assert_eq!(stats.per_game, vec![26, 26, 26]);
    assert_eq!(stats.updates, 78);
}

#[test]
fn student_needs_a_store_for_every_game() {
    let (g1, g2) = (bundled_game("game1").unwrap(), bundled_game("game2").unwrap());
    let hp = small_hp();
    let store = TeacherStore {
        games: vec![teacher_store(&g1, &hp, 1, 10).1],
    };
    let model = new_student(&[&g1, &g2], &hp, 8, 0).unwrap();
    let err = train_student(&store, model, &[&g1, &g2], &hp, 0, 1);
    assert!(matches!(err, Err(Error::EmptyStore(g)) if g == "game2"));
}

#[test]
fn single_game_student_imitates_its_teacher() {
    let spec = bundled_game("game1").unwrap();
    let hp = HyperParams {
        lr: 0.05,
        batch_size: 16,
        ..small_hp()
    };
    let (teacher, store) = teacher_store(&spec, &hp, 4, 2000);
    let store = TeacherStore { games: vec![store] };
    let model = new_student(&[&spec], &hp, 10, 1).unwrap();
    let (student, log, _) = train_student(&store, model, &[&spec], &hp, 1, 15).unwrap();
    assert!(!log.is_empty());

    let mut rollout = TeacherRollout::new(&teacher, &spec, 0.2, 77).unwrap();
    let mut agree = 0;
    for _ in 0..500 {
        let (_, s) = rollout.next_sample().unwrap();
        let t = greedy_command(&s.q_action, &s.q_object);
        let (qa, qo) = student.net.q_values(&student.token_maps[0].apply(&s.tokens), 0).unwrap();
        agree += usize::from(greedy_command(&qa, &qo) == t);
    }
    assert!(agree >= 475, "student agrees with teacher on {agree}/500 states");
}

#[test]
fn single_game_multitask_matches_teacher_training() {
    let spec = bundled_game("game1").unwrap();
    let hp = HyperParams {
        warmup: 16,
        eval_interval: 50,
        ..small_hp()
    };
    let (t, tlog) = train_teacher::<f32>(&spec, &hp, 3, 120).unwrap();
    let (m, mlog) = train_multitask_lstm_dqn(&[&spec], &hp, 3, 120).unwrap();
    assert_eq!(t.params.checksum(), m.net.params.checksum());
    assert_eq!(tlog.to_csv(), mlog.to_csv());
}

#[test]
fn multitask_logs_every_game() {
    let (g1, g2) = (bundled_game("game1").unwrap(), bundled_game("game2").unwrap());
    let hp = HyperParams {
        warmup: 16,
        eval_interval: 60,
        ..small_hp()
    };
    let (m, log) = train_multitask_lstm_dqn(&[&g1, &g2], &hp, 3, 120).unwrap();
    assert_eq!(m.net.heads().len(), 2);
    assert_eq!(log.for_game("game1").count(), 2);
    assert_eq!(log.for_game("game2").count(), 2);
}
