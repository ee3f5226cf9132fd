//! Interactive play: one human seat against AI seats over any line-based
//! reader and writer, so sessions can be scripted.
//!
//! The table (deals, reshuffles) draws from one random stream and the AI seats
//! from another. Replaying the logged actions on the table stream alone therefore
//! reproduces every round exactly.

use std::io::{BufRead, Write};

use rand::Rng;

use dhumbal::agent::Agent;
use dhumbal::arena::AgentSpec;
use dhumbal::card::parse_cards;
use dhumbal::engine::{
    observation_for, DiscardGroup, EndReason, Observation, RoundOutcome, RoundState, RuleConfig, STARTING_COINS,
};
use dhumbal::{seeded, Action, EngineError, Phase, PickSource};

use crate::CliError;

/// Mixed into the seed to derive the AI seats' random stream.
pub const AGENT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct PlayOptions {
    pub seed: u64,
    pub rounds: u32,
    /// AI seats in table order, skipping the human seat.
    pub opponents: Vec<AgentSpec>,
    pub human_seat: usize,
    pub rules: RuleConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub input: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub coins_before: Vec<i64>,
    /// Every applied action in order, with the seat that took it.
    pub actions: Vec<(usize, Action)>,
    pub outcome: RoundOutcome,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlayLog {
    /// Completed rounds only.
    pub rounds: Vec<RoundLog>,
    pub rejected: Vec<Rejection>,
    /// Balances by seat after the last completed round.
    pub coins: Vec<i64>,
    /// False when input ended or the player quit before the last round finished.
    pub finished: bool,
}

const GROUP_RULE: &str = "discard a single card, two or more cards of one rank, or three or more consecutive cards of one suit";

/// Turns one line of human input into an action legal for `obs`, or explains
/// why it is not. Accepted forms: `jhyap`/`pass`; a listed option number or the
/// cards themselves (`KS KH`); `stock`/`discard`.
pub fn parse_input(line: &str, obs: &Observation) -> Result<Action, String> {
    let text = line.trim();
    let word = text.to_ascii_lowercase();
    if text.is_empty() {
        return Err("empty input".into());
    }
    let legal = obs.legal_actions();
    let action = match obs.phase {
        Phase::JhyapCheck => match word.as_str() {
            "jhyap" | "j" | "declare" => Action::DeclareJhyap,
            "pass" | "p" | "no" | "n" => Action::Decline,
            _ => return Err(format!("'{text}' is not a Jhyap decision; answer jhyap or pass")),
        },
        Phase::Pick => match word.as_str() {
            "stock" | "s" => Action::Pick(PickSource::Stock),
            "discard" | "d" | "top" => Action::Pick(PickSource::DiscardTop),
            _ => return Err(format!("'{text}' is not a pick; answer stock or discard")),
        },
        Phase::Discard => {
            if let Ok(k) = word.parse::<usize>() {
                return match k.checked_sub(1).and_then(|i| legal.get(i)) {
                    Some(a) => Ok(*a),
                    None => Err(format!("there is no option {k}; choose 1 to {}", legal.len())),
                };
            }
            let cards = parse_cards(text).map_err(|_| {
                format!("'{text}' is not a discard; give an option number or cards such as 7H 7S")
            })?;
            if let Some(c) = cards.iter().find(|c| !obs.own_hand.contains(**c)) {
                return Err(format!("you do not hold {c}"));
            }
            let group = DiscardGroup::from_cards(&cards).map_err(|_| {
                let shown: Vec<String> = cards.iter().map(ToString::to_string).collect();
                format!("{} is not a legal group: {GROUP_RULE}", shown.join(" "))
            })?;
            Action::Discard(group)
        }
    };
    if legal.contains(&action) {
        return Ok(action);
    }
    Err(match action {
        Action::DeclareJhyap => EngineError::CannotDeclare(obs.hand_value()).to_string(),
        Action::Pick(PickSource::Stock) => "the stock is empty".into(),
        Action::Pick(PickSource::DiscardTop) => "there is no discard to take".into(),
        other => format!("{other} is not allowed now"),
    })
}

fn reason_text(r: EndReason) -> &'static str {
    match r {
        EndReason::JhyapShowdown => "Jhyap showdown",
        EndReason::DeckExhausted => "deck exhausted",
        EndReason::EmptyHand => "empty hand",
        EndReason::TurnLimit => "turn limit",
    }
}

fn options_text(obs: &Observation) -> String {
    match obs.phase {
        Phase::JhyapCheck => {
            if obs.legal_actions().contains(&Action::DeclareJhyap) {
                "jhyap, pass".into()
            } else {
                "pass".into()
            }
        }
        Phase::Discard => obs
            .legal_actions()
            .iter()
            .enumerate()
            .map(|(i, a)| match a {
                Action::Discard(g) => format!("{}) {g}", i + 1),
                other => format!("{}) {other}", i + 1),
            })
            .collect::<Vec<_>>()
            .join("  "),
        Phase::Pick => obs
            .legal_actions()
            .iter()
            .map(|a| match (a, obs.discard_top) {
                (Action::Pick(PickSource::DiscardTop), Some(c)) => format!("discard ({c})"),
                _ => "stock".into(),
            })
            .collect::<Vec<_>>()
            .join(", "),
    }
}

fn prompt(phase: Phase) -> &'static str {
    match phase {
        Phase::JhyapCheck => "Declare Jhyap? [jhyap/pass]",
        Phase::Discard => "Discard [option number or cards]",
        Phase::Pick => "Pick [stock/discard]",
    }
}

struct Table {
    names: Vec<String>,
    human: usize,
}

impl Table {
    fn render(&self, obs: &Observation, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "Your hand: {} (value {})", obs.own_hand, obs.hand_value())?;
        let top = obs.discard_top.map_or("none".to_string(), |c| c.to_string());
        writeln!(out, "Discard top: {top}   Stock: {} cards", obs.stock_size)?;
        for seat in (0..obs.num_players).filter(|&s| s != self.human) {
            writeln!(
                out,
                "  {}: {} cards, {} coins",
                self.names[seat], obs.hand_sizes[seat], obs.coins[seat]
            )?;
        }
        writeln!(out, "  You: {} coins", obs.own_coins)
    }

    fn narrate(&self, seat: usize, action: Action, obs: &Observation, out: &mut dyn Write) -> std::io::Result<()> {
        let who = &self.names[seat];
        match action {
            Action::DeclareJhyap => writeln!(out, "{who} declares Jhyap!"),
            Action::Decline => Ok(()),
            Action::Discard(g) => writeln!(out, "{who} discards {g}"),
            Action::Pick(PickSource::Stock) => writeln!(out, "{who} draws from the stock"),
            Action::Pick(PickSource::DiscardTop) => match obs.discard_top {
                Some(c) => writeln!(out, "{who} takes {c} from the discard pile"),
                None => writeln!(out, "{who} takes the discard"),
            },
        }
    }

    fn settle(&self, o: &RoundOutcome, coins: &[i64], out: &mut dyn Write) -> std::io::Result<()> {
        let winner = o.winner.map_or("nobody".to_string(), |w| self.names[w].clone());
        writeln!(out, "Round over ({}): winner {winner}", reason_text(o.end_reason))?;
        for (seat, name) in self.names.iter().enumerate() {
            writeln!(
                out,
                "  {name:<24} hand {:>3}  {:>+5} coins  balance {}",
                o.final_hand_values[seat], o.coin_delta[seat], coins[seat]
            )?;
        }
        Ok(())
    }
}

enum Reply {
    Act(Action),
    Stop,
}

fn ask(
    obs: &Observation,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    log: &mut PlayLog,
) -> Result<Reply, CliError> {
    loop {
        write!(out, "{}: ", prompt(obs.phase))?;
        out.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            writeln!(out, "Input ended; leaving the table.")?;
            return Ok(Reply::Stop);
        }
        match line.trim().to_ascii_lowercase().as_str() {
            "quit" | "exit" | "q" => return Ok(Reply::Stop),
            "help" | "?" => {
                writeln!(out, "Options: {}", options_text(obs))?;
                continue;
            }
            _ => {}
        }
        match parse_input(&line, obs) {
            Ok(a) => return Ok(Reply::Act(a)),
            Err(reason) => {
                writeln!(out, "Rejected: {reason}")?;
                writeln!(out, "Options: {}", options_text(obs))?;
                log.rejected.push(Rejection { input: line.trim_end().to_string(), reason });
            }
        }
    }
}

/// Runs an interactive session. Returns the log of completed rounds; running
/// out of input or typing `quit` ends the session early without error.
pub fn play_session(opts: &PlayOptions, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<PlayLog, CliError> {
    let n = opts.opponents.len() + 1;
    if !(2..=5).contains(&n) || opts.human_seat >= n {
        return Err(CliError::Usage(format!("a table needs 2 to 5 seats, got {n}")));
    }
    let mut agents: Vec<Option<Box<dyn Agent>>> = Vec::with_capacity(n);
    let mut names = Vec::with_capacity(n);
    let mut specs = opts.opponents.iter();
    for seat in 0..n {
        if seat == opts.human_seat {
            agents.push(None);
            names.push("You".to_string());
        } else {
            let spec = specs.next().expect("one spec per AI seat");
            agents.push(Some(spec.build()?));
            names.push(format!("Seat {seat} ({})", spec.label()));
        }
    }
    let table = Table { names, human: opts.human_seat };
    let mut engine_rng = seeded(opts.seed);
    let mut agent_rng = seeded(opts.seed ^ AGENT_STREAM);
    let mut log = PlayLog { coins: vec![STARTING_COINS; n], ..PlayLog::default() };

    for round in 0..opts.rounds {
        writeln!(out, "=== Round {} of {} ===", round + 1, opts.rounds)?;
        let coins_before = log.coins.clone();
        let mut state = RoundState::deal_with(&coins_before, opts.rules, round, &mut engine_rng)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let mut actions = Vec::new();
        while !state.is_terminal() {
            let seat = state.current_player();
            let obs = observation_for(&state, seat).expect("current seat");
            let action = match &mut agents[seat] {
                None => {
                    if obs.phase == Phase::JhyapCheck {
                        writeln!(out, "--- Your turn ---")?;
                        table.render(&obs, out)?;
                    }
                    match ask(&obs, input, out, &mut log)? {
                        Reply::Act(a) => a,
                        Reply::Stop => return Ok(log),
                    }
                }
                Some(agent) => {
                    let a = agent.decide(&obs, &mut agent_rng);
                    if state.is_legal(&a) {
                        a
                    } else {
                        let legal = state.legal_actions();
                        legal[agent_rng.random_range(0..legal.len())]
                    }
                }
            };
            if seat == opts.human_seat {
                if let Action::Pick(PickSource::DiscardTop) = action {
                    if let Some(c) = obs.discard_top {
                        writeln!(out, "You take {c}")?;
                    }
                }
            } else {
                table.narrate(seat, action, &obs, out)?;
            }
            state.apply(action, &mut engine_rng).expect("validated action");
            actions.push((seat, action));
        }
        let outcome = state.outcome().cloned().expect("terminal");
        for (c, d) in log.coins.iter_mut().zip(&outcome.coin_delta) {
            *c += d;
        }
        table.settle(&outcome, &log.coins, out)?;
        log.rounds.push(RoundLog { coins_before, actions, outcome });
    }
    log.finished = true;
    writeln!(out, "Session over. Final balance: {} coins", log.coins[opts.human_seat])?;
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dhumbal::card::CardSet;
    use dhumbal::engine::deal;

    fn obs_with(hand: &str, phase: Phase) -> Observation {
        let s = deal(2, &mut seeded(0)).unwrap();
        let mut o = observation_for(&s, 0).unwrap();
        o.own_hand = parse_cards(hand).unwrap().into_iter().collect::<CardSet>();
        o.phase = phase;
        o
    }

    #[test]
    fn jhyap_above_threshold_cites_the_rule() {
        let o = obs_with("5C 6D", Phase::JhyapCheck);
        let err = parse_input("jhyap", &o).unwrap_err();
        assert!(err.contains("10 points or fewer"), "{err}");
        assert!(err.contains("11"));
        assert_eq!(parse_input("pass", &o), Ok(Action::Decline));
        let o = obs_with("4C 6D", Phase::JhyapCheck);
        assert_eq!(parse_input("JHYAP", &o), Ok(Action::DeclareJhyap));
    }

    #[test]
    fn discards_by_cards_or_number() {
        let o = obs_with("7H 7S 2C 3C 4C", Phase::Discard);
        let set = DiscardGroup::from_cards(&parse_cards("7H 7S").unwrap()).unwrap();
        assert_eq!(parse_input("7s 7h", &o), Ok(Action::Discard(set)));
        let legal = o.legal_actions();
        assert_eq!(parse_input("1", &o), Ok(legal[0]));
        assert!(parse_input("0", &o).unwrap_err().contains("no option"));
        assert!(parse_input("99", &o).is_err());
        assert!(parse_input("KS", &o).unwrap_err().contains("do not hold"));
        assert!(parse_input("7H 2C", &o).unwrap_err().contains("not a legal group"));
        assert!(parse_input("stock", &o).is_err());
        assert!(parse_input("", &o).is_err());
    }

    #[test]
    fn picks_follow_availability() {
        let mut o = obs_with("7H", Phase::Pick);
        assert_eq!(parse_input("stock", &o), Ok(Action::Pick(PickSource::Stock)));
        o.stock_size = 0;
        assert!(parse_input("s", &o).unwrap_err().contains("stock is empty"));
        o.discard_top = None;
        assert!(parse_input("discard", &o).is_err());
        assert!(parse_input("pass", &o).is_err());
    }

    #[test]
    fn quitting_returns_a_partial_log() {
        let opts = PlayOptions {
            seed: 3,
            rounds: 2,
            opponents: vec![AgentSpec::Random],
            human_seat: 0,
            rules: RuleConfig::default(),
        };
        let mut out = Vec::new();
        let log = play_session(&opts, &mut "help\nquit\n".as_bytes(), &mut out).unwrap();
        assert!(!log.finished);
        assert!(log.rounds.is_empty());
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("Your hand:") && text.contains("Options:"));
    }
}
