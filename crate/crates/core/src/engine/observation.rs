use crate::card::CardSet;
use crate::engine::rules::{can_declare_jhyap, enumerate_legal_discards, DiscardGroup};
use crate::engine::state::{Action, Phase, PickSource, RoundState, RuleConfig};
use crate::error::EngineError;

/// What one seat can see: its own hand plus public table information.
///
/// `known_cards` lists, per seat, the cards that seat was seen picking from the
/// discard top and has not discarded since. Those are the only opponent cards an
/// observation ever reveals.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub seat: usize,
    pub num_players: usize,
    pub own_hand: CardSet,
    /// The card currently available to a discard-top pick (see [`RoundState::pickable_top`]).
    pub discard_top: Option<crate::card::Card>,
    pub discard_stack: Vec<DiscardGroup>,
    pub discard_pile: CardSet,
    pub stock_size: usize,
    /// Hand sizes of every seat, indexed by seat.
    pub hand_sizes: Vec<usize>,
    /// Hand sizes of the other seats, clockwise from `seat + 1`.
    pub opponent_hand_sizes: Vec<usize>,
    pub coins: Vec<i64>,
    pub own_coins: i64,
    pub avg_opponent_coins: f64,
    pub known_cards: Vec<CardSet>,
    pub current_player: usize,
    pub turn_count: u32,
    pub phase: Phase,
    pub round_index: u32,
    pub rules: RuleConfig,
}

pub fn observation_for(state: &RoundState, player: usize) -> Result<Observation, EngineError> {
    let n = state.num_players();
    if player >= n {
        return Err(EngineError::InvalidPlayer(player));
    }
    let hand_sizes: Vec<usize> = state.players.iter().map(|p| p.hand.len()).collect();
    let opponent_hand_sizes = (1..n).map(|k| hand_sizes[(player + k) % n]).collect();
    let coins: Vec<i64> = state.players.iter().map(|p| p.coins).collect();
    let opp_total: i64 = coins.iter().enumerate().filter(|(i, _)| *i != player).map(|(_, c)| c).sum();
    Ok(Observation {
        seat: player,
        num_players: n,
        own_hand: state.players[player].hand,
        discard_top: state.pickable_top(),
        discard_stack: state.discard_stack.clone(),
        discard_pile: state.discard_set,
        stock_size: state.stock.len(),
        hand_sizes,
        opponent_hand_sizes,
        own_coins: coins[player],
        avg_opponent_coins: opp_total as f64 / (n - 1) as f64,
        coins,
        known_cards: state.known.clone(),
        current_player: state.current_player,
        turn_count: state.turn_count,
        phase: state.phase,
        round_index: state.round_index,
        rules: state.rules,
    })
}

impl Observation {
    pub fn hand_value(&self) -> u32 {
        self.own_hand.value()
    }

    pub fn is_my_turn(&self) -> bool {
        self.current_player == self.seat
    }

    /// Legal actions for this seat in the current phase (empty when it is not to act).
    ///
    /// Depends only on the observer's hand and public information, so it equals
    /// [`RoundState::legal_actions`] for the acting seat.
    pub fn legal_actions(&self) -> Vec<Action> {
        if !self.is_my_turn() {
            return Vec::new();
        }
        match self.phase {
            Phase::JhyapCheck => {
                if can_declare_jhyap(self.own_hand) {
                    vec![Action::DeclareJhyap, Action::Decline]
                } else {
                    vec![Action::Decline]
                }
            }
            Phase::Discard => enumerate_legal_discards(self.own_hand)
                .map(|gs| gs.into_iter().map(Action::Discard).collect())
                .unwrap_or_default(),
            Phase::Pick => {
                let mut v = Vec::with_capacity(2);
                if self.stock_size > 0 {
                    v.push(Action::Pick(PickSource::Stock));
                }
                if self.discard_top.is_some() {
                    v.push(Action::Pick(PickSource::DiscardTop));
                }
                v
            }
        }
    }

    /// Every card this seat has not seen: not in its hand, not on the pile and not
    /// publicly known to be in another hand.
    pub fn unseen_cards(&self) -> CardSet {
        let known_elsewhere = self
            .known_cards
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.seat)
            .fold(CardSet::EMPTY, |acc, (_, k)| acc.union(*k));
        CardSet::FULL.difference(self.own_hand).difference(self.discard_pile).difference(known_elsewhere)
    }
}
