use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::card::{Card, CardSet, DECK_SIZE};
use crate::engine::rules::{
    can_declare_jhyap, enumerate_into, DiscardGroup, JHYAP_THRESHOLD, PAYMENT_CAP,
};
use crate::error::EngineError;
use crate::rng::GameRng;

pub const HAND_SIZE: usize = 5;
pub const STARTING_COINS: i64 = 10_000;
pub const MIN_PLAYERS: usize = 2;
pub const MAX_PLAYERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    JhyapCheck,
    Discard,
    Pick,
}

impl Phase {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PickSource {
    Stock,
    DiscardTop,
}

/// One decision taken by the player to act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    DeclareJhyap,
    Decline,
    Discard(DiscardGroup),
    Pick(PickSource),
}

impl Action {
    pub fn phase(&self) -> Phase {
        match self {
            Action::DeclareJhyap | Action::Decline => Phase::JhyapCheck,
            Action::Discard(_) => Phase::Discard,
            Action::Pick(_) => Phase::Pick,
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::DeclareJhyap => write!(f, "jhyap"),
            Action::Decline => write!(f, "pass"),
            Action::Discard(g) => write!(f, "discard {g}"),
            Action::Pick(PickSource::Stock) => write!(f, "pick stock"),
            Action::Pick(PickSource::DiscardTop) => write!(f, "pick discard"),
        }
    }
}

/// How the 100-turn limit is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnCounting {
    /// Every completed player turn counts.
    #[default]
    PerPlayerTurn,
    /// A turn is one full orbit of the table.
    PerOrbit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub turn_limit: u32,
    pub turn_counting: TurnCounting,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig { turn_limit: 100, turn_counting: TurnCounting::PerPlayerTurn }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayerState {
    pub hand: CardSet,
    pub coins: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndReason {
    JhyapShowdown,
    DeckExhausted,
    EmptyHand,
    TurnLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub winner: Option<usize>,
    pub coin_delta: Vec<i64>,
    pub jhyap_declared_by: Option<usize>,
    pub jhyap_succeeded: Option<bool>,
    pub end_reason: EndReason,
    /// Hand values of every seat when the round ended.
    pub final_hand_values: Vec<u32>,
}

fn capped(v: u32) -> i64 {
    v.min(PAYMENT_CAP) as i64
}

/// Showdown settlement from the hand values at declaration.
///
/// The declarer wins only if every other hand is strictly higher; each loser then
/// pays its capped value. Otherwise the first non-declarer clockwise from the
/// declarer holding the lowest non-declarer value wins, and the declarer alone pays
/// the capped values of every hand at the table (its own and the winner's included).
pub fn settle_showdown(values: &[u32], declarer: usize) -> Result<RoundOutcome, EngineError> {
    let n = values.len();
    if declarer >= n {
        return Err(EngineError::InvalidPlayer(declarer));
    }
    if values[declarer] > JHYAP_THRESHOLD {
        return Err(EngineError::CannotDeclare(values[declarer]));
    }
    let others = (1..n).map(|k| (declarer + k) % n);
    let min_other = others.clone().map(|i| values[i]).min().unwrap_or(u32::MAX);
    let mut delta = vec![0i64; n];
    let (winner, success) = if min_other > values[declarer] {
        for i in others {
            delta[i] -= capped(values[i]);
            delta[declarer] += capped(values[i]);
        }
        (declarer, true)
    } else {
        let winner = others.clone().find(|&i| values[i] == min_other).expect("n >= 2");
        let total: i64 = values.iter().map(|&v| capped(v)).sum();
        delta[declarer] -= total;
        delta[winner] += total;
        (winner, false)
    };
    Ok(RoundOutcome {
        winner: Some(winner),
        coin_delta: delta,
        jhyap_declared_by: Some(declarer),
        jhyap_succeeded: Some(success),
        end_reason: EndReason::JhyapShowdown,
        final_hand_values: values.to_vec(),
    })
}

fn empty_hand_outcome(values: &[u32], winner: usize) -> RoundOutcome {
    let mut delta = vec![0i64; values.len()];
    for (i, &v) in values.iter().enumerate() {
        if i != winner {
            delta[i] -= capped(v);
            delta[winner] += capped(v);
        }
    }
    RoundOutcome {
        winner: Some(winner),
        coin_delta: delta,
        jhyap_declared_by: None,
        jhyap_succeeded: None,
        end_reason: EndReason::EmptyHand,
        final_hand_values: values.to_vec(),
    }
}

fn draw_outcome(values: &[u32], reason: EndReason) -> RoundOutcome {
    RoundOutcome {
        winner: None,
        coin_delta: vec![0; values.len()],
        jhyap_declared_by: None,
        jhyap_succeeded: None,
        end_reason: reason,
        final_hand_values: values.to_vec(),
    }
}

/// The full (hidden) state of one round.
///
/// The random stream is not owned by the state: deals, reshuffles and every agent
/// draw from one caller-supplied [`GameRng`], which keeps a whole tournament on a
/// single reproducible stream.
#[derive(Debug, Clone)]
pub struct RoundState {
    pub(crate) players: Vec<PlayerState>,
    /// Top of the stock is the last element.
    pub(crate) stock: Vec<Card>,
    pub(crate) stock_set: CardSet,
    pub(crate) discard_stack: Vec<DiscardGroup>,
    pub(crate) discard_set: CardSet,
    /// Cards each seat is publicly known to hold (picked from the discard top).
    pub(crate) known: Vec<CardSet>,
    pub(crate) current_player: usize,
    pub(crate) turn_count: u32,
    pub(crate) player_turns: u32,
    pub(crate) phase: Phase,
    pub(crate) rules: RuleConfig,
    pub(crate) round_index: u32,
    pub(crate) outcome: Option<RoundOutcome>,
}

/// Deals a fresh round with default rules and starting balances.
pub fn deal(num_players: usize, rng: &mut GameRng) -> Result<RoundState, EngineError> {
    RoundState::deal_with(
        &vec![STARTING_COINS; num_players],
        RuleConfig::default(),
        0,
        rng,
    )
}

impl RoundState {
    /// Deals five cards to each seat, flips the first discard and leaves the rest as stock.
    pub fn deal_with(
        coins: &[i64],
        rules: RuleConfig,
        round_index: u32,
        rng: &mut GameRng,
    ) -> Result<RoundState, EngineError> {
        let n = coins.len();
        if !(MIN_PLAYERS..=MAX_PLAYERS).contains(&n) {
            return Err(EngineError::PlayerCount(n));
        }
        let mut deck: Vec<Card> = Card::deck().collect();
        deck.shuffle(rng);
        let mut players = Vec::with_capacity(n);
        for &c in coins {
            let hand: CardSet = deck.split_off(deck.len() - HAND_SIZE).into_iter().collect();
            players.push(PlayerState { hand, coins: c });
        }
        let flipped = deck.pop().expect("52 - 25 > 0");
        let stock_set: CardSet = deck.iter().copied().collect();
        let state = RoundState {
            players,
            stock: deck,
            stock_set,
            discard_stack: vec![DiscardGroup::single(flipped)],
            discard_set: CardSet::single(flipped),
            known: vec![CardSet::EMPTY; n],
            current_player: 0,
            turn_count: 0,
            player_turns: 0,
            phase: Phase::JhyapCheck,
            rules,
            round_index,
            outcome: None,
        };
        state.check_conservation();
        Ok(state)
    }

    /// Assembles a state from explicit parts (used by determinization and tests).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        players: Vec<PlayerState>,
        stock: Vec<Card>,
        discard_stack: Vec<DiscardGroup>,
        known: Vec<CardSet>,
        current_player: usize,
        turn_count: u32,
        phase: Phase,
        rules: RuleConfig,
        round_index: u32,
    ) -> Result<RoundState, EngineError> {
        let n = players.len();
        if !(MIN_PLAYERS..=MAX_PLAYERS).contains(&n) {
            return Err(EngineError::PlayerCount(n));
        }
        if current_player >= n {
            return Err(EngineError::InvalidPlayer(current_player));
        }
        let stock_set: CardSet = stock.iter().copied().collect();
        let discard_set =
            discard_stack.iter().fold(CardSet::EMPTY, |acc, g| acc.union(g.card_set()));
        let known = if known.len() == n { known } else { vec![CardSet::EMPTY; n] };
        let state = RoundState {
            players,
            stock,
            stock_set,
            discard_stack,
            discard_set,
            known,
            current_player,
            turn_count,
            player_turns: 0,
            phase,
            rules,
            round_index,
            outcome: None,
        };
        if !state.conserves_cards() {
            return Err(EngineError::IllegalDiscard("cards are not a partition of the deck".into()));
        }
        Ok(state)
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[PlayerState] {
        &self.players
    }

    pub fn hand(&self, player: usize) -> CardSet {
        self.players[player].hand
    }

    pub fn hand_values(&self) -> Vec<u32> {
        self.players.iter().map(|p| p.hand.value()).collect()
    }

    pub fn stock(&self) -> &[Card] {
        &self.stock
    }

    pub fn discard_stack(&self) -> &[DiscardGroup] {
        &self.discard_stack
    }

    pub fn current_player(&self) -> usize {
        self.current_player
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn turn_count(&self) -> u32 {
        self.turn_count
    }

    /// Completed player turns, regardless of the counting mode.
    pub fn player_turns(&self) -> u32 {
        self.player_turns
    }

    pub fn rules(&self) -> RuleConfig {
        self.rules
    }

    pub fn round_index(&self) -> u32 {
        self.round_index
    }

    pub fn known_cards(&self) -> &[CardSet] {
        &self.known
    }

    pub fn outcome(&self) -> Option<&RoundOutcome> {
        self.outcome.as_ref()
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }

    /// The card the current player could take with [`PickSource::DiscardTop`]:
    /// the top of the newest group not discarded by them this turn.
    pub fn pickable_top(&self) -> Option<Card> {
        let len = self.discard_stack.len();
        let idx = match self.phase {
            Phase::Pick => len.checked_sub(2)?,
            _ => len.checked_sub(1)?,
        };
        self.discard_stack[idx].top()
    }

    /// True iff hands, stock and discard pile partition the 52-card deck.
    pub fn conserves_cards(&self) -> bool {
        let mut seen = self.stock_set.union(self.discard_set);
        let mut count = self.stock_set.len() + self.discard_set.len();
        if self.stock.len() != self.stock_set.len() {
            return false;
        }
        for p in &self.players {
            seen = seen.union(p.hand);
            count += p.hand.len();
        }
        seen == CardSet::FULL && count == DECK_SIZE
    }

    fn check_conservation(&self) {
        assert!(self.conserves_cards(), "card conservation violated: {self:?}");
    }

    /// Legal actions for the player to act; empty once the round is over.
    pub fn legal_actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        self.legal_actions_into(&mut out, &mut Vec::new());
        out
    }

    /// Fills `out` with legal actions; `scratch` is reused for discard enumeration.
    pub fn legal_actions_into(&self, out: &mut Vec<Action>, scratch: &mut Vec<DiscardGroup>) {
        out.clear();
        if self.outcome.is_some() {
            return;
        }
        let hand = self.players[self.current_player].hand;
        match self.phase {
            Phase::JhyapCheck => {
                if can_declare_jhyap(hand) {
                    out.push(Action::DeclareJhyap);
                }
                out.push(Action::Decline);
            }
            Phase::Discard => {
                enumerate_into(hand, scratch);
                out.extend(scratch.iter().copied().map(Action::Discard));
            }
            Phase::Pick => {
                if !self.stock.is_empty() {
                    out.push(Action::Pick(PickSource::Stock));
                }
                if self.pickable_top().is_some() {
                    out.push(Action::Pick(PickSource::DiscardTop));
                }
            }
        }
    }

    pub fn is_legal(&self, action: &Action) -> bool {
        self.validate(action).is_ok()
    }

    fn validate(&self, action: &Action) -> Result<(), EngineError> {
        if self.outcome.is_some() {
            return Err(EngineError::RoundOver);
        }
        if action.phase() != self.phase {
            return Err(EngineError::WrongPhase { expected: action.phase(), actual: self.phase });
        }
        let hand = self.players[self.current_player].hand;
        match action {
            Action::DeclareJhyap if !can_declare_jhyap(hand) => {
                Err(EngineError::CannotDeclare(hand.value()))
            }
            Action::Discard(g) => {
                if !g.card_set().is_subset(hand) {
                    return Err(EngineError::IllegalDiscard(format!("{g} is not in hand")));
                }
                match DiscardGroup::classify(g.card_set()) {
                    Some(c) if c == *g => Ok(()),
                    _ => Err(EngineError::IllegalDiscard(format!("{g} is not a legal group"))),
                }
            }
            Action::Pick(PickSource::Stock) if self.stock.is_empty() => {
                Err(EngineError::EmptyStock)
            }
            Action::Pick(PickSource::DiscardTop) if self.pickable_top().is_none() => {
                Err(EngineError::NoDiscardTop)
            }
            _ => Ok(()),
        }
    }

    /// Applies one action for the current player. On error the state is unchanged.
    /// Returns the outcome if the action ended the round.
    pub fn apply(
        &mut self,
        action: Action,
        rng: &mut GameRng,
    ) -> Result<Option<RoundOutcome>, EngineError> {
        self.validate(&action)?;
        match action {
            Action::DeclareJhyap => {
                let outcome = settle_showdown(&self.hand_values(), self.current_player)?;
                self.finish(outcome);
            }
            Action::Decline => self.phase = Phase::Discard,
            Action::Discard(g) => self.apply_discard(g),
            Action::Pick(source) => {
                self.apply_pick(source, rng);
            }
        }
        self.check_conservation();
        Ok(self.outcome.clone())
    }

    fn apply_discard(&mut self, group: DiscardGroup) {
        let p = self.current_player;
        let cards = group.card_set();
        self.players[p].hand = self.players[p].hand.difference(cards);
        self.known[p] = self.known[p].difference(cards);
        self.discard_stack.push(group);
        self.discard_set = self.discard_set.union(cards);
        if self.players[p].hand.is_empty() {
            let outcome = empty_hand_outcome(&self.hand_values(), p);
            self.finish(outcome);
        } else {
            self.phase = Phase::Pick;
        }
    }

    fn apply_pick(&mut self, source: PickSource, rng: &mut GameRng) -> Card {
        let p = self.current_player;
        let card = match source {
            PickSource::Stock => {
                let c = self.stock.pop().expect("validated");
                self.stock_set.remove(c);
                c
            }
            PickSource::DiscardTop => {
                let idx = self.discard_stack.len() - 2;
                let c = self.discard_stack[idx].take_top().expect("validated");
                if self.discard_stack[idx].is_empty() {
                    self.discard_stack.remove(idx);
                }
                self.discard_set.remove(c);
                self.known[p].insert(c);
                c
            }
        };
        self.players[p].hand.insert(card);

        if self.stock.is_empty() && !self.reshuffle(rng) {
            let outcome = draw_outcome(&self.hand_values(), EndReason::DeckExhausted);
            self.finish(outcome);
            return card;
        }

        self.player_turns += 1;
        let next = (p + 1) % self.players.len();
        match self.rules.turn_counting {
            TurnCounting::PerPlayerTurn => self.turn_count += 1,
            TurnCounting::PerOrbit if next == 0 => self.turn_count += 1,
            TurnCounting::PerOrbit => {}
        }
        self.current_player = next;
        self.phase = Phase::JhyapCheck;
        if self.turn_count >= self.rules.turn_limit {
            let outcome = draw_outcome(&self.hand_values(), EndReason::TurnLimit);
            self.finish(outcome);
        }
        card
    }

    /// Moves every discard group except the newest into a shuffled stock.
    fn reshuffle(&mut self, rng: &mut GameRng) -> bool {
        if self.discard_stack.len() < 2 {
            return false;
        }
        let newest = self.discard_stack.pop().expect("len >= 2");
        let mut cards: Vec<Card> = self.discard_stack.drain(..).flat_map(|g| g.cards()).collect();
        cards.sort_unstable();
        cards.shuffle(rng);
        self.stock_set = cards.iter().copied().collect();
        self.stock = cards;
        self.discard_stack.push(newest);
        self.discard_set = newest.card_set();
        true
    }

    fn finish(&mut self, outcome: RoundOutcome) {
        for (p, d) in self.players.iter_mut().zip(&outcome.coin_delta) {
            p.coins += d;
        }
        self.outcome = Some(outcome);
    }

    /// The end condition currently in force, if any.
    pub fn round_termination(&self) -> Option<RoundOutcome> {
        if let Some(o) = &self.outcome {
            return Some(o.clone());
        }
        let values = self.hand_values();
        if let Some(p) = self.players.iter().position(|p| p.hand.is_empty()) {
            return Some(empty_hand_outcome(&values, p));
        }
        if self.turn_count >= self.rules.turn_limit {
            return Some(draw_outcome(&values, EndReason::TurnLimit));
        }
        if self.stock.is_empty() && self.discard_stack.len() < 2 {
            return Some(draw_outcome(&values, EndReason::DeckExhausted));
        }
        None
    }

    /// Resolves a showdown for `declarer` without mutating the state.
    pub fn resolve_jhyap(&self, declarer: usize) -> Result<RoundOutcome, EngineError> {
        settle_showdown(&self.hand_values(), declarer)
    }
}
