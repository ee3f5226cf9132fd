use super::*;
use crate::engine::deal;
use crate::learning::{train, OpponentKind, TrainConfig};

fn config(participants: Vec<AgentSpec>, rounds: u32, seed: u64) -> TournamentConfig {
    TournamentConfig { rounds, seed, ..TournamentConfig::new(participants) }
}

fn heur(profile: ProfileKind) -> AgentSpec {
    AgentSpec::Heuristic { profile }
}

fn strip_timing(mut r: RoundRecord) -> RoundRecord {
    r.decision_ms.iter_mut().for_each(|x| *x = 0.0);
    r
}

#[test]
fn one_round_one_record() {
    let res = run_tournament(&config(vec![AgentSpec::Random, AgentSpec::Random], 1, 3)).unwrap();
    assert_eq!(res.records.len(), 1);
    assert_eq!(res.participants, vec!["Random-1", "Random-2"]);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = config(vec![AgentSpec::Random], 1, 1);
    assert!(matches!(run_tournament(&c), Err(ArenaError::Config(_))));
    c.participants.push(AgentSpec::Random);
    c.rounds = 0;
    assert!(matches!(run_tournament(&c), Err(ArenaError::Config(_))));
    let c = TournamentConfig { players_per_game: 3, ..config(vec![AgentSpec::Random; 2], 1, 1) };
    assert!(c.validate().is_err());
}

#[test]
fn same_seed_same_records() {
    let c = config(vec![heur(ProfileKind::Aggressive); 4], 20, 42);
    let a = run_tournament(&c).unwrap();
    let b = run_tournament(&c).unwrap();
    let strip = |v: Vec<RoundRecord>| v.into_iter().map(strip_timing).collect::<Vec<_>>();
    assert_eq!(strip(a.records), strip(b.records));
}

#[test]
fn records_mirror_engine_outcomes() {
    let mut rng = seeded(5);
    for _ in 0..30 {
        let mut state = deal(3, &mut rng).unwrap();
        let mut agents: Vec<Box<dyn Agent>> =
            vec![Box::new(RandomAgent), Box::new(HeuristicAgent::new(ProfileKind::Balanced)), Box::new(RandomAgent)];
        let played = play_round(&mut state, &mut agents, &mut rng);
        assert_eq!(Some(&played.outcome), state.outcome());
        let seating = [2, 0, 1];
        let rec = RoundRecord::from_played(0, &seating, &played);
        for (seat, &p) in seating.iter().enumerate() {
            assert_eq!(rec.coin_delta[p], played.outcome.coin_delta[seat]);
            assert_eq!(rec.final_hand_values[p], played.outcome.final_hand_values[seat]);
        }
        assert_eq!(rec.coin_delta.iter().sum::<i64>(), 0);
        assert_eq!(rec.winner, played.outcome.winner.map(|s| seating[s]));
        assert!(played.turns <= state.rules().turn_limit);
        assert!(played.seats.iter().all(|s| s.invalid_actions == 0 && s.decision_ms >= 0.0));
    }
}

#[test]
fn tournament_accounting() {
    let c = config(
        vec![AgentSpec::Random, heur(ProfileKind::Aggressive), heur(ProfileKind::Conservative), AgentSpec::Random],
        300,
        7,
    );
    let res = run_tournament(&c).unwrap();
    let s = &res.summary;
    assert_eq!(s.agents.iter().map(|a| a.wins).sum::<u64>() + s.draws, 300);
    assert_eq!(res.final_coins.iter().sum::<i64>(), 4 * STARTING_COINS);
    for (a, &coins) in s.agents.iter().zip(&res.final_coins) {
        assert_eq!(a.final_coins, coins);
        assert!(a.jhyap_successes <= a.jhyap_calls);
        assert_eq!(a.invalid_actions, 0);
    }
    let total_discards: u64 = res.records.iter().flat_map(|r| r.cards_discarded.iter()).map(|&c| c as u64).sum();
    for a in &s.agents {
        assert!(a.cards_per_round * 300.0 <= total_discards as f64);
    }
    for r in &res.records {
        assert!(r.turns <= c.rules.turn_limit);
        assert_eq!(r.coin_delta.iter().sum::<i64>(), 0);
        if let Some(j) = r.jhyap {
            assert!(j.hand_value <= 10);
            assert_eq!(j.success, r.winner == Some(j.declarer));
        }
    }
}

fn seat_counts(rounds: u32) -> [[u32; 4]; 4] {
    let res = run_tournament(&config(vec![AgentSpec::Random; 4], rounds, 42)).unwrap();
    let mut counts = [[0u32; 4]; 4];
    for r in &res.records {
        for (seat, &p) in r.seating.iter().enumerate() {
            counts[p][seat] += 1;
        }
    }
    counts
}

#[test]
fn randomized_seating_passes_chi_square() {
    let counts = seat_counts(1024);
    let chi: f64 = counts.iter().flatten().map(|&c| (c as f64 - 256.0).powi(2) / 256.0).sum();
    // 9 degrees of freedom, 0.001 critical value
    assert!(chi < 27.88, "chi-square {chi}");
}

#[test]
fn randomized_seating_frequencies_within_three_points() {
    for row in seat_counts(4096) {
        for c in row {
            let f = c as f64 / 4096.0;
            assert!((f - 0.25).abs() <= 0.03, "seat frequency {f}");
        }
    }
}

#[test]
fn fixed_seating_keeps_order() {
    let c = TournamentConfig { seating: Seating::Fixed, ..config(vec![AgentSpec::Random; 3], 5, 1) };
    let res = run_tournament(&c).unwrap();
    assert!(res.records.iter().all(|r| r.seating == vec![0, 1, 2]));
}

#[test]
fn records_csv_round_trip() {
    let res = run_tournament(&config(vec![heur(ProfileKind::Balanced), AgentSpec::Random, AgentSpec::Random], 40, 2))
        .unwrap();
    let text = records_to_csv(&res.participants, &res.records);
    assert!(text.starts_with("participants,round_index,seating,winner,end_reason,"));
    assert!(text.lines().next().unwrap().ends_with(",decision_ms"));
    let (names, recs) = records_from_csv(&text).unwrap();
    assert_eq!(names, res.participants);
    assert_eq!(recs, res.records);
    assert_eq!(summarize(&names, &recs).unwrap(), res.summary);
    assert!(records_from_csv("participants\n").is_err());
    let header_only = text.lines().next().unwrap().to_string() + "\n";
    assert!(records_from_csv(&header_only).is_err());
}

#[test]
fn toml_config_covers_every_agent_type() {
    let text = r#"
        players_per_game = 5
        rounds = 12
        seed = 7
        seating = "fixed"

        [rules]
        turn_limit = 80

        [[participants]]
        type = "heuristic"
        profile = "opportunistic"

        [[participants]]
        type = "random"

        [[participants]]
        type = "ismcts"
        iterations = 50
        determinizations = 2
        time_limit_ms = 250

        [[participants]]
        type = "mcts"

        [[participants]]
        type = "ppo"
        checkpoint = "ppo.json"
    "#;
    let c = TournamentConfig::from_toml(text).unwrap();
    assert_eq!((c.players_per_game, c.rounds, c.seed, c.seating), (5, 12, 7, Seating::Fixed));
    assert_eq!(c.rules.turn_limit, 80);
    match &c.participants[2] {
        AgentSpec::Ismcts { search } => {
            assert_eq!((search.iterations, search.determinizations, search.time_limit_ms), (50, 2, Some(250)));
            assert_eq!(search.exploration_c, SearchConfig::default().exploration_c);
        }
        other => panic!("parsed {other:?}"),
    }
    assert_eq!(c.participants[3], AgentSpec::Mcts { search: SearchConfig::default() });
    assert_eq!(c.participants[4], AgentSpec::Ppo { checkpoint: "ppo.json".into() });
    let back = TournamentConfig::from_toml(&toml::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
    assert!(TournamentConfig::from_toml("players_per_game = 2\nparticipants = [{ type = \"alien\" }]").is_err());
}

#[test]
fn championship_needs_one_entrant_per_category() {
    let c = config(vec![heur(ProfileKind::Aggressive), AgentSpec::Random, AgentSpec::Random, AgentSpec::Random], 1, 1);
    assert!(matches!(championship(&c), Err(ArenaError::Config(_))));
}

#[test]
fn learned_checkpoints_load_by_kind() {
    let out = train(&TrainConfig {
        kind: LearnerKind::Dqn,
        episodes: 2,
        players: 3,
        opponents: vec![OpponentKind::Random],
        ..TrainConfig::default()
    });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dqn.json");
    out.checkpoints[0].save(&path).unwrap();
    assert!(AgentSpec::Dqn { checkpoint: path.clone() }.build().is_ok());
    assert!(matches!(AgentSpec::Ppo { checkpoint: path.clone() }.build(), Err(ArenaError::Checkpoint { .. })));
    let missing = AgentSpec::Ppo { checkpoint: dir.path().join("none.json") };
    assert!(matches!(missing.build(), Err(ArenaError::Checkpoint { .. })));
    let res = run_tournament(&config(vec![AgentSpec::Dqn { checkpoint: path }, AgentSpec::Random, AgentSpec::Random], 10, 4))
        .unwrap();
    assert_eq!(res.participants[0], "DQN");
    assert_eq!(res.records.len(), 10);
}

#[test]
fn labels_number_duplicates() {
    let c = TournamentConfig::new(vec![AgentSpec::Random, heur(ProfileKind::Balanced), AgentSpec::Random]);
    assert_eq!(c.labels(), vec!["Random-1", "Balanced", "Random-2"]);
}
