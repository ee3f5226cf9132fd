use rand::seq::SliceRandom;

use crate::card::{Card, CardSet};
use crate::engine::{DiscardGroup, Observation, PlayerState, RoundState};
use crate::error::EngineError;
use crate::rng::GameRng;

/// What one seat can infer about the hidden cards.
///
/// Every card outside the observer's hand and the discard pile is either publicly
/// known to sit in a particular opponent's hand or belongs to `unseen`, the pool
/// shared by the opponents' unknown cards and the stock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefState {
    pub seat: usize,
    pub own_hand: CardSet,
    pub discard_pile: CardSet,
    pub unseen: CardSet,
    pub known: Vec<CardSet>,
    pub hand_sizes: Vec<usize>,
    pub stock_size: usize,
}

/// A public event seen by the belief holder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BeliefEvent {
    Discarded { player: usize, group: DiscardGroup },
    PickedDiscardTop { player: usize, card: Card },
    PickedStock { player: usize },
    /// The stock ran out and every discard outside `kept` went back into it.
    Reshuffled { kept: CardSet },
    /// Hands were revealed at the end of the round; the belief starts over.
    Showdown,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BeliefError {
    #[error("seat {0} is not at the table")]
    UnknownPlayer(usize),
    #[error("card {card} cannot have come from seat {player}")]
    Inconsistent { player: usize, card: Card },
    #[error("card {0} is not on the discard pile")]
    NotOnPile(Card),
    #[error("the observer's own stock draw must name the card drawn")]
    OwnDrawUnspecified,
    #[error("the stock is already empty")]
    EmptyStock,
    #[error("{pool} unseen cards cannot fill {needed} hidden slots")]
    PoolMismatch { pool: usize, needed: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl BeliefState {
    pub fn from_observation(obs: &Observation) -> BeliefState {
        let mut known = obs.known_cards.clone();
        known.resize(obs.num_players, CardSet::EMPTY);
        known[obs.seat] = CardSet::EMPTY;
        BeliefState {
            seat: obs.seat,
            own_hand: obs.own_hand,
            discard_pile: obs.discard_pile,
            unseen: obs.unseen_cards(),
            known,
            hand_sizes: obs.hand_sizes.clone(),
            stock_size: obs.stock_size,
        }
    }

    /// Number of cards in opponents' hands that are not publicly known.
    pub fn hidden_slots(&self) -> usize {
        (0..self.hand_sizes.len())
            .filter(|&i| i != self.seat)
            .map(|i| self.hand_sizes[i] - self.known[i].len())
            .sum()
    }

    /// The pool must cover the hidden hand slots plus the stock exactly.
    pub fn is_consistent(&self) -> bool {
        self.unseen.len() == self.hidden_slots() + self.stock_size
    }

    /// Probability that an opponent's particular unknown slot holds a given unseen card.
    pub fn slot_probability(&self) -> f64 {
        if self.unseen.is_empty() {
            0.0
        } else {
            1.0 / self.unseen.len() as f64
        }
    }

    /// Applies a public event. On error the belief is unchanged.
    pub fn update(&mut self, event: &BeliefEvent) -> Result<(), BeliefError> {
        match event {
            BeliefEvent::Discarded { player, group } => {
                let p = self.check_player(*player)?;
                let cards = group.card_set();
                if p == self.seat {
                    if !cards.is_subset(self.own_hand) {
                        let bad = cards.difference(self.own_hand).iter().next().expect("non-empty");
                        return Err(BeliefError::Inconsistent { player: p, card: bad });
                    }
                    self.own_hand = self.own_hand.difference(cards);
                } else {
                    let possible = self.known[p].union(self.unseen);
                    if let Some(bad) = cards.difference(possible).iter().next() {
                        return Err(BeliefError::Inconsistent { player: p, card: bad });
                    }
                    let from_unknown = cards.difference(self.known[p]);
                    if from_unknown.len() > self.hand_sizes[p] - self.known[p].len() {
                        let bad = from_unknown.iter().next().expect("non-empty");
                        return Err(BeliefError::Inconsistent { player: p, card: bad });
                    }
                    self.known[p] = self.known[p].difference(cards);
                    self.unseen = self.unseen.difference(cards);
                }
                self.hand_sizes[p] -= cards.len();
                self.discard_pile = self.discard_pile.union(cards);
            }
            BeliefEvent::PickedDiscardTop { player, card } => {
                let p = self.check_player(*player)?;
                if !self.discard_pile.contains(*card) {
                    return Err(BeliefError::NotOnPile(*card));
                }
                self.discard_pile.remove(*card);
                if p == self.seat {
                    self.own_hand.insert(*card);
                } else {
                    self.known[p].insert(*card);
                }
                self.hand_sizes[p] += 1;
            }
            BeliefEvent::PickedStock { player } => {
                let p = self.check_player(*player)?;
                if self.stock_size == 0 {
                    return Err(BeliefError::EmptyStock);
                }
                if p == self.seat {
                    return Err(BeliefError::OwnDrawUnspecified);
                }
                self.stock_size -= 1;
                self.hand_sizes[p] += 1;
            }
            BeliefEvent::Reshuffled { kept } => {
                let back = self.discard_pile.difference(*kept);
                self.unseen = self.unseen.union(back);
                self.stock_size += back.len();
                self.discard_pile = *kept;
            }
            BeliefEvent::Showdown => {
                self.unseen = CardSet::FULL.difference(self.own_hand);
                self.discard_pile = CardSet::EMPTY;
                self.known.iter_mut().for_each(|k| *k = CardSet::EMPTY);
                self.hand_sizes.iter_mut().for_each(|h| *h = 0);
                self.stock_size = self.unseen.len();
            }
        }
        Ok(())
    }

    /// Records the observer's own stock draw, whose identity it does see.
    pub fn own_stock_draw(&mut self, card: Card) -> Result<(), BeliefError> {
        if self.stock_size == 0 {
            return Err(BeliefError::EmptyStock);
        }
        if !self.unseen.contains(card) {
            return Err(BeliefError::Inconsistent { player: self.seat, card });
        }
        self.unseen.remove(card);
        self.own_hand.insert(card);
        self.stock_size -= 1;
        self.hand_sizes[self.seat] += 1;
        Ok(())
    }

    fn check_player(&self, p: usize) -> Result<usize, BeliefError> {
        if p < self.hand_sizes.len() {
            Ok(p)
        } else {
            Err(BeliefError::UnknownPlayer(p))
        }
    }
}

/// Samples one complete state consistent with the observation: the unseen pool
/// is shuffled uniformly, each opponent keeps its known cards and receives random
/// unseen cards for its remaining slots, and the rest becomes the stock in random order.
pub fn determinize(obs: &Observation, rng: &mut GameRng) -> Result<RoundState, BeliefError> {
    let belief = BeliefState::from_observation(obs);
    determinize_belief(&belief, obs, rng)
}

pub fn determinize_belief(
    belief: &BeliefState,
    obs: &Observation,
    rng: &mut GameRng,
) -> Result<RoundState, BeliefError> {
    let needed = belief.hidden_slots() + belief.stock_size;
    if belief.unseen.len() != needed {
        return Err(BeliefError::PoolMismatch { pool: belief.unseen.len(), needed });
    }
    let mut pool: Vec<Card> = belief.unseen.iter().collect();
    pool.shuffle(rng);
    let n = obs.num_players;
    let mut players = Vec::with_capacity(n);
    for i in 0..n {
        let hand = if i == belief.seat {
            belief.own_hand
        } else {
            let mut h = belief.known[i];
            let missing = belief.hand_sizes[i] - h.len();
            for c in pool.drain(pool.len() - missing..) {
                h.insert(c);
            }
            h
        };
        players.push(PlayerState { hand, coins: obs.coins[i] });
    }
    let mut known = obs.known_cards.clone();
    known.resize(n, CardSet::EMPTY);
    let state = RoundState::from_parts(
        players,
        pool,
        obs.discard_stack.clone(),
        known,
        obs.current_player,
        obs.turn_count,
        obs.phase,
        obs.rules,
        obs.round_index,
    )?;
    Ok(state)
}
