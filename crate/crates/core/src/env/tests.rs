use super::*;

fn game1() -> GameSpec {
    bundled_game("game1").unwrap()
}

fn doc_with(f: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value = serde_json::from_str(bundled_game_text("game1").unwrap()).unwrap();
    f(&mut v);
    v.to_string()
}

fn invalid_path(text: &str) -> String {
    match parse_game_spec(text) {
        Err(EnvError::Invalid { path, .. }) => path,
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn bundled_games_parse_with_expected_shape() {
    let mut total = 0;
    for id in BUNDLED_GAMES {
        let g = bundled_game(id).unwrap();
        assert_eq!(g.rooms.len(), 4, "{id}");
        assert_eq!(g.quests.len(), 4, "{id}");
        assert_eq!(g.start_states().count(), 16);
        assert_eq!(g.actions.len(), 5);
        assert_eq!(g.objects.len(), 8);
        assert!(g.vocab.len() >= 75 && g.vocab.len() <= 100, "{id}: {}", g.vocab.len());
        total += g.vocab.len();
        for q in &g.quests {
            assert!(q.texts.len() >= 2);
            assert!(q.texts.iter().any(|t| t.starts_with("not ")), "negated variant for {}", q.id);
        }
    }
    let avg = total as f64 / 5.0;
    assert!((avg - 90.0).abs() <= 5.0, "average vocabulary {avg}");
}

#[test]
fn bundled_vocabularies_are_distinct_and_game5_overlaps_each() {
    let games: Vec<GameSpec> = BUNDLED_GAMES.iter().map(|g| bundled_game(g).unwrap()).collect();
    for i in 0..5 {
        for j in i + 1..5 {
            assert_ne!(games[i].vocab.words().len() == games[j].vocab.words().len()
                && games[i].vocab.words().iter().all(|w| games[j].vocab.contains(w)), true);
        }
    }
    for g in &games[..3] {
        let shared = games[4].vocab.words().iter().filter(|w| g.vocab.contains(w)).count();
        let g5_only_objects = games[4].objects.iter().filter(|o| g.objects.contains(o)).count();
        assert!(shared > 0 && g5_only_objects > 0, "game5 shares with {}", g.game_id);
    }
}

#[test]
fn parse_reports_field_paths() {
    assert_eq!(
        invalid_path(&doc_with(|v| v["exits"][0]["to"] = "attic".into())),
        "exits[0].to"
    );
    assert_eq!(
        invalid_path(&doc_with(|v| {
            v["objects"].as_object_mut().unwrap().remove("garden");
        })),
        "objects.garden"
    );
    assert_eq!(
        invalid_path(&doc_with(|v| v["descriptions"]["kitchen"] = serde_json::json!([]))),
        "descriptions.kitchen"
    );
    assert_eq!(
        invalid_path(&doc_with(|v| v["surprise"] = 1.into())),
        "$"
    );
    // one-way exit
    assert_eq!(
        invalid_path(&doc_with(|v| {
            v["exits"].as_array_mut().unwrap().remove(1);
        })),
        "exits[0]"
    );
    assert_eq!(
        invalid_path(&doc_with(|v| v["quests"][0]["object"] = "bed".into())),
        "quests[0].object"
    );
}

#[test]
fn vocabulary_follows_document_order() {
    let g = game1();
    let first_desc = tokenize(&g.descriptions[0][0]);
    assert_eq!(&g.vocab.words()[..3], &first_desc[..3]);
    // moving "actions" to the front puts action words first
    let text = bundled_game_text("game1").unwrap();
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    let mut reordered = serde_json::Map::new();
    reordered.insert("actions".into(), v["actions"].clone());
    for (k, val) in v.as_object().unwrap() {
        if k != "actions" {
            reordered.insert(k.clone(), val.clone());
        }
    }
    let g2 = parse_game_spec(&serde_json::Value::Object(reordered).to_string()).unwrap();
    assert_eq!(&g2.vocab.words()[..5], &["eat", "sleep", "watch", "exercise", "go"]);
    assert_eq!(g2.vocab.len(), g.vocab.len());
}

#[test]
fn command_space_is_cross_product() {
    let g = game1();
    let cmds = g.command_space();
    assert_eq!(cmds.len(), 40);
    assert_eq!(cmds, g.command_space());
    assert_eq!(cmds[0], Command::new(0, 0));
    assert_eq!(cmds[8], Command::new(1, 0));
    for q in &g.quests {
        assert!(cmds.contains(&Command::new(q.action, q.object)));
    }
}

#[test]
fn reset_is_deterministic_and_covers_all_starts() {
    let g = game1();
    assert_eq!(g.reset(11), g.reset(11));
    let mut seen = std::collections::HashSet::new();
    for seed in 0..500 {
        let (s, _) = g.reset(seed);
        seen.insert((s.room, s.quest));
        assert_eq!(s.steps_taken, 0);
    }
    assert_eq!(seen.len(), 16);
}

#[test]
fn reset_distribution_is_uniform() {
    // χ² with 15 degrees of freedom; critical value at p = 0.01 is 30.578.
    let g = game1();
    let mut counts = [0usize; 16];
    let n = 10_000;
    for seed in 0..n {
        let (s, _) = g.reset(seed as u64);
        counts[s.room * 4 + s.quest] += 1;
    }
    let expected = n as f64 / 16.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < 30.578, "chi2 = {chi2}");
}

#[test]
fn observations_use_only_vocabulary_words() {
    for id in BUNDLED_GAMES {
        let g = bundled_game(id).unwrap();
        for seed in 0..200 {
            let (s, obs) = g.reset(seed);
            assert_eq!(obs.game_id, id);
            assert!(g.encode(&obs.text).is_ok(), "{}", obs.text);
            let (_, r) = g.step(&s, Command::new(0, 0)).unwrap();
            assert!(g.encode(&r.observation.text).is_ok());
        }
    }
}

#[test]
fn step_examples() {
    let g = game1();
    let kitchen = g.room_index("kitchen").unwrap();
    let hungry = g.quest_index("hungry").unwrap();
    let (s, _) = g.reset_to(kitchen, hungry, 3);
    let (next, r) = g.step(&s, g.command("eat", "apple").unwrap()).unwrap();
    assert!((r.reward - 0.99).abs() < 1e-12);
    assert!(r.done && r.quest_completed);
    assert_eq!(next.steps_taken, 1);

    let living = g.room_index("living").unwrap();
    let (s, _) = g.reset_to(living, hungry, 3);
    let (next, r) = g.step(&s, g.command("go", "east").unwrap()).unwrap();
    assert_eq!(next.room, kitchen);
    assert_eq!(r.reward, -0.01);
    assert!(!r.done && !r.quest_completed);

    // blocked direction: no move
    let (next, _) = g.step(&s, g.command("go", "north").unwrap()).unwrap();
    assert_eq!(next.room, living);

    for room in 0..4 {
        let (s, _) = g.reset_to(room, hungry, 9);
        let (next, r) = g.step(&s, g.command("eat", "bed").unwrap()).unwrap();
        assert_eq!(next.room, room);
        assert_eq!(r.reward, -0.01);
        assert!(!r.done);
    }

    assert!(matches!(
        g.step(&s, Command::new(5, 0)),
        Err(EnvError::InvalidCommand { .. })
    ));
}

#[test]
fn episode_ends_at_cap() {
    let g = game1();
    let (mut s, _) = g.reset_to(0, 0, 1);
    let idle = g.command("eat", "bed").unwrap();
    for i in 1..=20 {
        let (next, r) = g.step(&s, idle).unwrap();
        assert_eq!(r.done, i == 20);
        assert!(!r.quest_completed);
        s = next;
    }
    assert!(matches!(g.step(&s, idle), Err(EnvError::EpisodeOver(20))));
}

#[test]
fn only_the_quest_command_in_the_quest_room_completes() {
    for id in BUNDLED_GAMES {
        let g = bundled_game(id).unwrap();
        for (room, quest) in g.start_states() {
            for cmd in g.command_space() {
                let (s, _) = g.reset_to(room, quest, 0);
                let (_, r) = g.step(&s, cmd).unwrap();
                let q = &g.quests[quest];
                let target = room == q.room && cmd == Command::new(q.action, q.object);
                assert_eq!(r.quest_completed, target, "{id} {room} {quest} {cmd:?}");
            }
        }
    }
}

#[test]
fn optimal_return_oracle() {
    assert_eq!(optimal_average_return(&game1()).unwrap(), 0.98);
    // column layout: hop counts sum to 2·(1+2+3+1+2+1) = 20 over 16 starts
    let g4 = bundled_game("game4").unwrap();
    assert!((optimal_average_return(&g4).unwrap() - 0.9775).abs() < 1e-12);
    // star layout: hop counts sum to 3 + 3·(1+2+2) = 18
    let g5 = bundled_game("game5").unwrap();
    assert!((optimal_average_return(&g5).unwrap() - 0.97875).abs() < 1e-12);
}

#[test]
fn single_room_optimum_is_one_step() {
    let text = r#"{"game_id":"tiny","rooms":["cell"],"exits":[],
        "objects":{"cell":"bread"},"descriptions":{"cell":["a cell with bread"]},
        "quests":[{"id":"hungry","texts":["you are hungry"],"room":"cell","action":"eat","object":"bread"}],
        "actions":["eat"],"objects_vocab":["bread"]}"#;
    let g = parse_game_spec(text).unwrap();
    assert!((optimal_average_return(&g).unwrap() - 0.99).abs() < 1e-12);
}

#[test]
fn unreachable_quest_is_an_error() {
    let text = r#"{"game_id":"split","rooms":["a","b"],"exits":[],
        "objects":{"a":"bread","b":"bed"},"descriptions":{"a":["room a"],"b":["room b"]},
        "quests":[{"id":"q","texts":["sleep"],"room":"b","action":"sleep","object":"bed"}],
        "actions":["sleep"],"objects_vocab":["bread","bed"]}"#;
    let g = parse_game_spec(text).unwrap();
    assert!(matches!(optimal_average_return(&g), Err(EnvError::Unreachable { .. })));
}

#[test]
fn scripted_policy_reaches_the_optimum_from_every_start() {
    for id in BUNDLED_GAMES {
        let g = bundled_game(id).unwrap();
        let mut total = 0.0;
        for (room, quest) in g.start_states() {
            let (mut s, _) = g.reset_to(room, quest, 0);
            let mut ret = 0.0;
            loop {
                let (next, r) = g.step(&s, optimal_command(&g, s.room, s.quest).unwrap()).unwrap();
                ret += r.reward;
                s = next;
                if r.done {
                    assert!(r.quest_completed);
                    break;
                }
            }
            total += ret;
        }
        let mean = total / 16.0;
        assert!((mean - optimal_average_return(&g).unwrap()).abs() < 1e-12, "{id}");
    }
}
