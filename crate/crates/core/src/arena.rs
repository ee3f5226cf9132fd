//! Tournament orchestration: agent construction from configuration, timed round
//! play, persistent coin balances, seating, and the record/summary files.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, RandomAgent};
use crate::analytics::{summarize, MetricsSummary, StatsError};
use crate::engine::{observation_for, Action, EndReason, RoundOutcome, RoundState, RuleConfig, STARTING_COINS};
use crate::heuristics::{HeuristicAgent, ProfileKind};
use crate::learning::{LearnerCheckpoint, LearnerKind};
use crate::neuralnet::NetError;
use crate::rng::{seeded, GameRng, DEFAULT_SEED};
use crate::search::{SearchAgent, SearchConfig, SearchVariant};

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint {path}: {source}")]
    Checkpoint { path: PathBuf, source: NetError },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("malformed records: {0}")]
    Records(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Random,
    RuleBased,
    Search,
    Learning,
}

/// One tournament entrant as written in a config file, e.g.
/// `{ type = "ismcts", iterations = 200, determinizations = 3 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AgentSpec {
    Random,
    Heuristic {
        profile: ProfileKind,
    },
    Mcts {
        #[serde(flatten)]
        search: SearchConfig,
    },
    Ismcts {
        #[serde(flatten)]
        search: SearchConfig,
    },
    Ppo {
        checkpoint: PathBuf,
    },
    Dqn {
        checkpoint: PathBuf,
    },
}

impl AgentSpec {
    pub fn label(&self) -> &'static str {
        match self {
            AgentSpec::Random => "Random",
            AgentSpec::Heuristic { profile } => profile.name(),
            AgentSpec::Mcts { .. } => "MCTS",
            AgentSpec::Ismcts { .. } => "ISMCTS",
            AgentSpec::Ppo { .. } => "PPO",
            AgentSpec::Dqn { .. } => "DQN",
        }
    }

    pub fn category(&self) -> Category {
        match self {
            AgentSpec::Random => Category::Random,
            AgentSpec::Heuristic { .. } => Category::RuleBased,
            AgentSpec::Mcts { .. } | AgentSpec::Ismcts { .. } => Category::Search,
            AgentSpec::Ppo { .. } | AgentSpec::Dqn { .. } => Category::Learning,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Agent>, ArenaError> {
        Ok(match self {
            AgentSpec::Random => Box::new(RandomAgent),
            AgentSpec::Heuristic { profile } => Box::new(HeuristicAgent::new(*profile)),
            AgentSpec::Mcts { search } => {
                search.validate().map_err(ArenaError::Config)?;
                Box::new(SearchAgent { variant: SearchVariant::Mcts, config: *search })
            }
            AgentSpec::Ismcts { search } => {
                search.validate().map_err(ArenaError::Config)?;
                Box::new(SearchAgent { variant: SearchVariant::Ismcts, config: *search })
            }
            AgentSpec::Ppo { checkpoint } => Box::new(load_learned(checkpoint, LearnerKind::Ppo)?),
            AgentSpec::Dqn { checkpoint } => Box::new(load_learned(checkpoint, LearnerKind::Dqn)?),
        })
    }
}

fn load_learned(path: &Path, kind: LearnerKind) -> Result<crate::learning::LearnedAgent, ArenaError> {
    let err = |source| ArenaError::Checkpoint { path: path.to_path_buf(), source };
    let c = LearnerCheckpoint::load(path).map_err(err)?;
    if c.kind != kind {
        return Err(err(NetError::Architecture(format!(
            "holds a {} policy, expected {}",
            c.kind.name(),
            kind.name()
        ))));
    }
    c.agent().map_err(err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seating {
    /// Participant i always sits in seat i.
    Fixed,
    /// A fresh uniform seat permutation every round.
    #[default]
    RandomizedPerRound,
}

fn default_rounds() -> u32 {
    1024
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentConfig {
    pub players_per_game: usize,
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub seating: Seating,
    #[serde(default)]
    pub rules: RuleConfig,
    pub participants: Vec<AgentSpec>,
}

impl TournamentConfig {
    pub fn new(participants: Vec<AgentSpec>) -> TournamentConfig {
        TournamentConfig {
            players_per_game: participants.len(),
            rounds: default_rounds(),
            seed: DEFAULT_SEED,
            seating: Seating::default(),
            rules: RuleConfig::default(),
            participants,
        }
    }

    pub fn rule_based() -> TournamentConfig {
        TournamentConfig::new(ProfileKind::ALL.iter().map(|&profile| AgentSpec::Heuristic { profile }).collect())
    }

    pub fn from_toml(text: &str) -> Result<TournamentConfig, ArenaError> {
        toml::from_str(text).map_err(|e| ArenaError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ArenaError> {
        if !(2..=5).contains(&self.players_per_game) {
            return Err(ArenaError::Config(format!("players_per_game {} is outside 2..=5", self.players_per_game)));
        }
        if self.participants.len() != self.players_per_game {
            return Err(ArenaError::Config(format!(
                "{} participants for {} seats",
                self.participants.len(),
                self.players_per_game
            )));
        }
        if self.rounds == 0 {
            return Err(ArenaError::Config("rounds must be at least 1".into()));
        }
        if self.rules.turn_limit == 0 {
            return Err(ArenaError::Config("turn_limit must be at least 1".into()));
        }
        Ok(())
    }

    /// Display names, numbered when an entrant type appears more than once.
    pub fn labels(&self) -> Vec<String> {
        let base: Vec<&str> = self.participants.iter().map(AgentSpec::label).collect();
        base.iter()
            .enumerate()
            .map(|(i, b)| {
                let total = base.iter().filter(|x| *x == b).count();
                if total == 1 {
                    b.to_string()
                } else {
                    format!("{b}-{}", base[..=i].iter().filter(|x| *x == b).count())
                }
            })
            .collect()
    }
}

/// Per-seat bookkeeping of one played round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeatStats {
    pub cards_discarded: u32,
    pub turns: u32,
    pub decisions: u32,
    pub decision_ms: f64,
    pub invalid_actions: u32,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayedRound {
    pub outcome: RoundOutcome,
    pub seats: Vec<SeatStats>,
    pub turns: u32,
}

/// Plays `state` to the end with `agents[seat]` deciding for each seat.
///
/// Each decision is timed. An illegal answer counts as an invalid action (−10
/// reward) and a uniformly random legal action is played instead; valid discards
/// and picks earn +1 and the settlement delta is added at the end.
pub fn play_round<A>(state: &mut RoundState, agents: &mut [A], rng: &mut GameRng) -> PlayedRound
where
    A: std::ops::DerefMut<Target = dyn Agent>,
{
    assert_eq!(agents.len(), state.num_players(), "one agent per seat");
    let mut seats = vec![SeatStats::default(); agents.len()];
    while !state.is_terminal() {
        let p = state.current_player();
        let obs = observation_for(state, p).expect("current seat");
        let started = Instant::now();
        let mut action = agents[p].decide(&obs, rng);
        let s = &mut seats[p];
        s.decision_ms += started.elapsed().as_secs_f64() * 1e3;
        s.decisions += 1;
        if state.is_legal(&action) {
            if matches!(action, Action::Discard(_) | Action::Pick(_)) {
                s.reward += 1.0;
            }
        } else {
            s.invalid_actions += 1;
            s.reward -= 10.0;
            let legal = state.legal_actions();
            action = legal[rng.random_range(0..legal.len())];
        }
        if let Action::Discard(g) = action {
            s.cards_discarded += g.len() as u32;
            s.turns += 1;
        }
        state.apply(action, rng).expect("legal action");
    }
    let outcome = state.outcome().cloned().expect("terminal state has an outcome");
    for (s, d) in seats.iter_mut().zip(&outcome.coin_delta) {
        s.reward += *d as f64;
    }
    PlayedRound { outcome, seats, turns: state.player_turns() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JhyapEvent {
    pub declarer: usize,
    pub hand_value: u32,
    pub success: bool,
}

/// One round of a tournament. Per-agent vectors are indexed by participant,
/// not by seat; `seating[seat]` is the participant sitting there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: u32,
    pub seating: Vec<usize>,
    pub winner: Option<usize>,
    pub end_reason: EndReason,
    pub jhyap: Option<JhyapEvent>,
    pub turns: u32,
    pub coin_delta: Vec<i64>,
    pub cards_discarded: Vec<u32>,
    pub turns_taken: Vec<u32>,
    pub rewards: Vec<f64>,
    pub invalid_actions: Vec<u32>,
    pub final_hand_values: Vec<u32>,
    pub decisions: Vec<u32>,
    /// Total wall-clock milliseconds spent deciding.
    pub decision_ms: Vec<f64>,
}

impl RoundRecord {
    fn from_played(round_index: u32, seating: &[usize], played: &PlayedRound) -> RoundRecord {
        let n = seating.len();
        let mut rec = RoundRecord {
            round_index,
            seating: seating.to_vec(),
            winner: played.outcome.winner.map(|s| seating[s]),
            end_reason: played.outcome.end_reason,
            jhyap: played.outcome.jhyap_declared_by.map(|s| JhyapEvent {
                declarer: seating[s],
                hand_value: played.outcome.final_hand_values[s],
                success: played.outcome.jhyap_succeeded == Some(true),
            }),
            turns: played.turns,
            coin_delta: vec![0; n],
            cards_discarded: vec![0; n],
            turns_taken: vec![0; n],
            rewards: vec![0.0; n],
            invalid_actions: vec![0; n],
            final_hand_values: vec![0; n],
            decisions: vec![0; n],
            decision_ms: vec![0.0; n],
        };
        for (seat, &p) in seating.iter().enumerate() {
            let s = &played.seats[seat];
            rec.coin_delta[p] = played.outcome.coin_delta[seat];
            rec.cards_discarded[p] = s.cards_discarded;
            rec.turns_taken[p] = s.turns;
            rec.rewards[p] = s.reward;
            rec.invalid_actions[p] = s.invalid_actions;
            rec.final_hand_values[p] = played.outcome.final_hand_values[seat];
            rec.decisions[p] = s.decisions;
            rec.decision_ms[p] = s.decision_ms;
        }
        rec
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentResult {
    pub participants: Vec<String>,
    pub records: Vec<RoundRecord>,
    pub summary: MetricsSummary,
    /// Balances after the last round, by participant.
    pub final_coins: Vec<i64>,
}

/// Plays `rounds` fresh deals on one random stream; balances carry over between rounds.
pub fn run_tournament(cfg: &TournamentConfig) -> Result<TournamentResult, ArenaError> {
    cfg.validate()?;
    let mut agents = cfg.participants.iter().map(AgentSpec::build).collect::<Result<Vec<_>, _>>()?;
    let n = cfg.players_per_game;
    let mut rng = seeded(cfg.seed);
    let mut coins = vec![STARTING_COINS; n];
    let mut records = Vec::with_capacity(cfg.rounds as usize);
    let mut seating: Vec<usize> = (0..n).collect();
    for round in 0..cfg.rounds {
        if cfg.seating == Seating::RandomizedPerRound {
            seating.sort_unstable();
            seating.shuffle(&mut rng);
        }
        let seat_coins: Vec<i64> = seating.iter().map(|&p| coins[p]).collect();
        let mut state = RoundState::deal_with(&seat_coins, cfg.rules, round, &mut rng)
            .map_err(|e| ArenaError::Config(e.to_string()))?;
        let mut slots: Vec<Option<&mut Box<dyn Agent>>> = agents.iter_mut().map(Some).collect();
        let mut by_seat: Vec<&mut (dyn Agent + 'static)> =
            seating.iter().map(|&p| slots[p].take().expect("seating is a permutation").as_mut()).collect();
        let played = play_round(&mut state, &mut by_seat, &mut rng);
        let rec = RoundRecord::from_played(round, &seating, &played);
        for (c, d) in coins.iter_mut().zip(&rec.coin_delta) {
            *c += d;
        }
        records.push(rec);
    }
    debug_assert_eq!(coins.iter().sum::<i64>(), STARTING_COINS * n as i64);
    let participants = cfg.labels();
    let summary = summarize(&participants, &records)?;
    Ok(TournamentResult { participants, records, summary, final_coins: coins })
}

/// The cross-category final: one rule-based, one search, one learning agent and Random.
pub fn championship(cfg: &TournamentConfig) -> Result<TournamentResult, ArenaError> {
    let cats: HashSet<Category> = cfg.participants.iter().map(AgentSpec::category).collect();
    if cfg.participants.len() != 4 || cats.len() != 4 {
        return Err(ArenaError::Config(
            "a championship needs exactly one rule-based, one search, one learning and one random entrant".into(),
        ));
    }
    run_tournament(cfg)
}

pub const RECORD_HEADER: [&str; 16] = [
    "participants",
    "round_index",
    "seating",
    "winner",
    "end_reason",
    "jhyap_declarer",
    "jhyap_hand_value",
    "jhyap_success",
    "turns",
    "coin_delta",
    "cards_discarded",
    "turns_taken",
    "rewards",
    "invalid_actions",
    "final_hand_values",
    "decisions",
];

/// Timing columns come last so they can be dropped for byte comparisons.
pub const TIMING_HEADER: [&str; 1] = ["decision_ms"];

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn split<T: std::str::FromStr>(field: &str, what: &str) -> Result<Vec<T>, ArenaError> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|x| x.parse().map_err(|_| ArenaError::Records(format!("bad {what} value '{x}'"))))
        .collect()
}

fn reason_name(r: EndReason) -> &'static str {
    match r {
        EndReason::JhyapShowdown => "jhyap_showdown",
        EndReason::DeckExhausted => "deck_exhausted",
        EndReason::EmptyHand => "empty_hand",
        EndReason::TurnLimit => "turn_limit",
    }
}

fn parse_reason(s: &str) -> Result<EndReason, ArenaError> {
    Ok(match s {
        "jhyap_showdown" => EndReason::JhyapShowdown,
        "deck_exhausted" => EndReason::DeckExhausted,
        "empty_hand" => EndReason::EmptyHand,
        "turn_limit" => EndReason::TurnLimit,
        other => return Err(ArenaError::Records(format!("unknown end reason '{other}'"))),
    })
}

/// Records as CSV: one row per round, per-agent lists `;`-separated in participant order.
pub fn records_to_csv(participants: &[String], records: &[RoundRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = RECORD_HEADER.iter().chain(TIMING_HEADER.iter()).copied().collect();
    w.write_record(&header).expect("in-memory write");
    let names = participants.join(";");
    for r in records {
        let opt = |v: Option<String>| v.unwrap_or_default();
        w.write_record([
            names.clone(),
            r.round_index.to_string(),
            join(&r.seating),
            opt(r.winner.map(|x| x.to_string())),
            reason_name(r.end_reason).to_string(),
            opt(r.jhyap.map(|j| j.declarer.to_string())),
            opt(r.jhyap.map(|j| j.hand_value.to_string())),
            opt(r.jhyap.map(|j| (j.success as u8).to_string())),
            r.turns.to_string(),
            join(&r.coin_delta),
            join(&r.cards_discarded),
            join(&r.turns_taken),
            join(&r.rewards),
            join(&r.invalid_actions),
            join(&r.final_hand_values),
            join(&r.decisions),
            join(&r.decision_ms),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Parses [`records_to_csv`] output back into participant names and records.
pub fn records_from_csv(text: &str) -> Result<(Vec<String>, Vec<RoundRecord>), ArenaError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| ArenaError::Records(e.to_string()))?.clone();
    let expected: Vec<&str> = RECORD_HEADER.iter().chain(TIMING_HEADER.iter()).copied().collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(ArenaError::Records("unexpected header".into()));
    }
    let mut participants: Option<Vec<String>> = None;
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| ArenaError::Records(e.to_string()))?;
        let names: Vec<String> = row[0].split(';').map(str::to_string).collect();
        match &participants {
            None => participants = Some(names),
            Some(p) if *p != names => return Err(ArenaError::Records("participants change between rows".into())),
            Some(_) => {}
        }
        let num = |i: usize, what: &str| -> Result<u32, ArenaError> {
            row[i].parse().map_err(|_| ArenaError::Records(format!("bad {what} '{}'", &row[i])))
        };
        let jhyap = if row[5].is_empty() {
            None
        } else {
            Some(JhyapEvent {
                declarer: num(5, "declarer")? as usize,
                hand_value: num(6, "hand value")?,
                success: num(7, "success")? == 1,
            })
        };
        records.push(RoundRecord {
            round_index: num(1, "round_index")?,
            seating: split(&row[2], "seating")?,
            winner: if row[3].is_empty() { None } else { Some(num(3, "winner")? as usize) },
            end_reason: parse_reason(&row[4])?,
            jhyap,
            turns: num(8, "turns")?,
            coin_delta: split(&row[9], "coin_delta")?,
            cards_discarded: split(&row[10], "cards_discarded")?,
            turns_taken: split(&row[11], "turns_taken")?,
            rewards: split(&row[12], "rewards")?,
            invalid_actions: split(&row[13], "invalid_actions")?,
            final_hand_values: split(&row[14], "final_hand_values")?,
            decisions: split(&row[15], "decisions")?,
            decision_ms: split(&row[16], "decision_ms")?,
        });
    }
    let participants = participants.ok_or_else(|| ArenaError::Records("no records".into()))?;
    let n = participants.len();
    for r in &records {
        if r.coin_delta.len() != n || r.coin_delta.iter().sum::<i64>() != 0 {
            return Err(ArenaError::Records(format!("round {} is inconsistent", r.round_index)));
        }
    }
    Ok((participants, records))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ArenaError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| ArenaError::Io { path: dir.into(), message: e.to_string() })?;
    }
    std::fs::write(path, text).map_err(|e| ArenaError::Io { path: path.into(), message: e.to_string() })
}

pub fn read_text(path: &Path) -> Result<String, ArenaError> {
    std::fs::read_to_string(path).map_err(|e| ArenaError::Io { path: path.into(), message: e.to_string() })
}

#[cfg(test)]
mod tests;
