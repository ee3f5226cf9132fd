//! Fixed-size state vectors and the 128-entry action table.

use crate::card::{Card, CardSet, Suit};
use crate::engine::{Action, DiscardGroup, Observation, Phase, PickSource};

pub const STATE_DIM: usize = 117;
pub const NUM_ACTIONS: usize = 128;

pub const DECLARE: usize = 0;
pub const DECLINE: usize = 1;
pub const SINGLE_BASE: usize = 2;
pub const SET_BASE: usize = 54;
pub const RUN_BASE: usize = 67;
pub const PICK_STOCK: usize = 111;
pub const PICK_DISCARD: usize = 112;
pub const FIRST_RESERVED: usize = 113;

const HAND_OFFSET: usize = 0;
const PILE_OFFSET: usize = 52;
const PLAYER_OFFSET: usize = 104;
const SCALAR_OFFSET: usize = 106;
const PHASE_OFFSET: usize = 112;
const SCALAR_CLAMP: f64 = 1.5;

fn scalar(x: f64) -> f64 {
    x.clamp(0.0, SCALAR_CLAMP)
}

/// Encodes an observation as a 117-entry vector:
/// own hand bitmap, discard pile bitmap, seat parity one-hot, six normalised
/// scalars, phase one-hot and two zero pads.
pub fn encode_state(obs: &Observation) -> Vec<f64> {
    let mut v = vec![0.0; STATE_DIM];
    for c in obs.own_hand.iter() {
        v[HAND_OFFSET + c.index() as usize] = 1.0;
    }
    for c in obs.discard_pile.iter() {
        v[PILE_OFFSET + c.index() as usize] = 1.0;
    }
    v[PLAYER_OFFSET + obs.seat % 2] = 1.0;
    let opp = &obs.opponent_hand_sizes;
    let mean_opp = if opp.is_empty() { 0.0 } else { opp.iter().sum::<usize>() as f64 / opp.len() as f64 };
    let scalars = [
        obs.own_hand.value() as f64 / 65.0,
        obs.turn_count as f64 / 100.0,
        mean_opp / 5.0,
        obs.own_coins as f64 / 1e4,
        obs.discard_pile.len() as f64 / 52.0,
        obs.round_index as f64 / 1024.0,
    ];
    for (i, x) in scalars.into_iter().enumerate() {
        v[SCALAR_OFFSET + i] = scalar(x);
    }
    v[PHASE_OFFSET + obs.phase.index()] = 1.0;
    v
}

/// Longest same-suit run in `hand` starting exactly at `start`, if it has 3+ cards.
fn longest_run_from(hand: CardSet, suit: Suit, start: u8) -> Option<CardSet> {
    let mut run = CardSet::EMPTY;
    let mut rank = start;
    while rank <= 13 && hand.contains(Card::new(rank, suit)) {
        run.insert(Card::new(rank, suit));
        rank += 1;
    }
    (run.len() >= 3).then_some(run)
}

/// The engine action behind `index` for this observer, or `None` if the index
/// does not describe a move available in the current phase.
pub fn index_to_action(index: usize, obs: &Observation) -> Option<Action> {
    let hand = obs.own_hand;
    let action = match index {
        DECLARE => Action::DeclareJhyap,
        DECLINE => Action::Decline,
        i if (SINGLE_BASE..SET_BASE).contains(&i) => {
            let c = Card::from_index((i - SINGLE_BASE) as u8);
            if !hand.contains(c) {
                return None;
            }
            Action::Discard(DiscardGroup::single(c))
        }
        i if (SET_BASE..RUN_BASE).contains(&i) => {
            let same = hand.of_rank((i - SET_BASE + 1) as u8);
            if same.len() < 2 {
                return None;
            }
            Action::Discard(DiscardGroup::classify(same)?)
        }
        i if (RUN_BASE..PICK_STOCK).contains(&i) => {
            let k = i - RUN_BASE;
            let suit = Suit::from_index((k / 11) as u8);
            let run = longest_run_from(hand, suit, (k % 11 + 1) as u8)?;
            Action::Discard(DiscardGroup::classify(run)?)
        }
        PICK_STOCK => Action::Pick(PickSource::Stock),
        PICK_DISCARD => Action::Pick(PickSource::DiscardTop),
        _ => return None,
    };
    let legal = obs.is_my_turn()
        && action.phase() == obs.phase
        && match action {
            Action::DeclareJhyap => crate::engine::can_declare_jhyap(hand),
            Action::Decline => true,
            Action::Discard(_) => true,
            Action::Pick(PickSource::Stock) => obs.stock_size > 0,
            Action::Pick(PickSource::DiscardTop) => obs.discard_top.is_some(),
        };
    legal.then_some(action)
}

/// Table index of an action, if the table can express it. Partial sets and runs
/// that are not the longest from their start rank have no index.
pub fn action_to_index(action: &Action, hand: CardSet) -> Option<usize> {
    match action {
        Action::DeclareJhyap => Some(DECLARE),
        Action::Decline => Some(DECLINE),
        Action::Pick(PickSource::Stock) => Some(PICK_STOCK),
        Action::Pick(PickSource::DiscardTop) => Some(PICK_DISCARD),
        Action::Discard(g) => {
            let cards = g.card_set();
            let first = cards.canonical()[0];
            match g.kind() {
                crate::engine::GroupKind::Single => Some(SINGLE_BASE + first.index() as usize),
                crate::engine::GroupKind::Set => {
                    (hand.of_rank(first.rank()) == cards).then(|| SET_BASE + first.rank() as usize - 1)
                }
                crate::engine::GroupKind::Sequence => {
                    let start = first.rank();
                    (start <= 11 && longest_run_from(hand, first.suit(), start) == Some(cards))
                        .then(|| RUN_BASE + first.suit().index() as usize * 11 + start as usize - 1)
                }
            }
        }
    }
}

/// `mask[i]` is true iff index `i` maps to a legal action for this observer.
pub fn legal_action_mask(obs: &Observation) -> [bool; NUM_ACTIONS] {
    let mut mask = [false; NUM_ACTIONS];
    for (i, m) in mask.iter_mut().enumerate().take(FIRST_RESERVED) {
        *m = index_to_action(i, obs).is_some();
    }
    mask
}

pub fn legal_indices(mask: &[bool; NUM_ACTIONS]) -> Vec<usize> {
    (0..NUM_ACTIONS).filter(|&i| mask[i]).collect()
}

/// The phase slots of the state vector.
pub fn phase_one_hot(phase: Phase) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[phase.index()] = 1.0;
    v
}
