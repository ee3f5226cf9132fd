use std::fmt;

use serde::{Deserialize, Serialize};

use crate::card::{Card, CardSet, Suit};
use crate::error::EngineError;

/// A hand with this value or less may declare Jhyap.
pub const JHYAP_THRESHOLD: u32 = 10;
/// Per-hand cap on any single payment.
pub const PAYMENT_CAP: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupKind {
    Single,
    Set,
    Sequence,
}

/// A legal discard: a single card, a same-rank set (2+) or a same-suit run (3+).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct DiscardGroup {
    kind: GroupKind,
    cards: CardSet,
}

impl DiscardGroup {
    /// Classifies a card set, returning `None` if it is not a legal discard shape.
    pub fn classify(cards: CardSet) -> Option<DiscardGroup> {
        let kind = match cards.len() {
            0 => return None,
            1 => GroupKind::Single,
            _ if is_same_rank(cards) => GroupKind::Set,
            n if n >= 3 && is_run(cards) => GroupKind::Sequence,
            _ => return None,
        };
        Some(DiscardGroup { kind, cards })
    }

    pub fn from_cards(cards: &[Card]) -> Result<DiscardGroup, EngineError> {
        let set: CardSet = cards.iter().copied().collect();
        if set.len() != cards.len() {
            return Err(EngineError::IllegalDiscard("duplicate cards".into()));
        }
        DiscardGroup::classify(set).ok_or_else(|| {
            EngineError::IllegalDiscard(format!(
                "{set} is not a single, a same-rank set, or a same-suit run of 3+"
            ))
        })
    }

    pub fn single(card: Card) -> DiscardGroup {
        DiscardGroup { kind: GroupKind::Single, cards: CardSet::single(card) }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn card_set(&self) -> CardSet {
        self.cards
    }

    /// Cards in canonical order.
    pub fn cards(&self) -> Vec<Card> {
        self.cards.canonical()
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn value(&self) -> u32 {
        self.cards.value()
    }

    /// The card a later player may pick: last in canonical order.
    pub fn top(&self) -> Option<Card> {
        self.cards.top()
    }

    /// Removes the top card. Used by the discard stack only; the group may no longer
    /// satisfy its kind afterwards.
    pub(crate) fn take_top(&mut self) -> Option<Card> {
        let top = self.top()?;
        self.cards.remove(top);
        Some(top)
    }
}

impl fmt::Debug for DiscardGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{}]", self.kind, self.cards)
    }
}

impl fmt::Display for DiscardGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.cards)
    }
}

fn is_same_rank(cards: CardSet) -> bool {
    let mut ranks = cards.iter().map(Card::rank);
    match ranks.next() {
        Some(r) => ranks.all(|x| x == r),
        None => false,
    }
}

fn is_run(cards: CardSet) -> bool {
    let Some(first) = cards.iter().next() else { return false };
    let mask = cards.suit_mask(first.suit());
    if mask.count_ones() as usize != cards.len() {
        return false;
    }
    // consecutive bits: mask shifted to bit 0 is 2^k - 1
    let shifted = mask >> mask.trailing_zeros();
    shifted & (shifted + 1) == 0
}

/// Sum of card values.
pub fn hand_value(hand: CardSet) -> u32 {
    hand.value()
}

/// True for 3+ cards of one suit with strictly consecutive ranks, Ace low, no wrap.
pub fn is_valid_sequence(cards: &[Card]) -> bool {
    if cards.len() < 3 {
        return false;
    }
    let set: CardSet = cards.iter().copied().collect();
    set.len() == cards.len() && is_run(set)
}

pub fn can_declare_jhyap(hand: CardSet) -> bool {
    hand_value(hand) <= JHYAP_THRESHOLD
}

/// Every legal discard from `hand`: singles in canonical order, then same-rank
/// subsets (by rank, then subset mask), then runs (by suit, start rank, length).
pub fn enumerate_legal_discards(hand: CardSet) -> Result<Vec<DiscardGroup>, EngineError> {
    if hand.is_empty() {
        return Err(EngineError::EmptyHand);
    }
    let mut out = Vec::with_capacity(hand.len() + 4);
    enumerate_into(hand, &mut out);
    Ok(out)
}

/// Allocation-free variant of [`enumerate_legal_discards`]; clears `out` first.
pub fn enumerate_into(hand: CardSet, out: &mut Vec<DiscardGroup>) {
    out.clear();
    for rank in 1..=13u8 {
        for suit in Suit::ALL {
            let c = Card::new(rank, suit);
            if hand.contains(c) {
                out.push(DiscardGroup::single(c));
            }
        }
    }
    for rank in 1..=13u8 {
        let same = hand.of_rank(rank);
        let members: Vec<Card> = same.iter().collect();
        let k = members.len();
        if k < 2 {
            continue;
        }
        for mask in 1u32..(1 << k) {
            if mask.count_ones() < 2 {
                continue;
            }
            let cards: CardSet =
                (0..k).filter(|i| mask & (1 << i) != 0).map(|i| members[i]).collect();
            out.push(DiscardGroup { kind: GroupKind::Set, cards });
        }
    }
    for suit in Suit::ALL {
        let mask = hand.suit_mask(suit);
        for start in 1..=11u8 {
            let mut cards = CardSet::EMPTY;
            let mut rank = start;
            while rank <= 13 && mask & (1 << (rank - 1)) != 0 {
                cards.insert(Card::new(rank, suit));
                if cards.len() >= 3 {
                    out.push(DiscardGroup { kind: GroupKind::Sequence, cards });
                }
                rank += 1;
            }
        }
    }
}

/// True if `card` would form a set or a run of 3 with cards already in `hand`.
pub fn completes_combination(hand: CardSet, card: Card) -> bool {
    if !hand.of_rank(card.rank()).is_empty() {
        return true;
    }
    let mask = hand.suit_mask(card.suit()) as u32;
    let r = card.rank() as i32;
    let has = |x: i32| (1..=13).contains(&x) && mask & (1 << (x - 1)) != 0;
    (has(r - 2) && has(r - 1)) || (has(r - 1) && has(r + 1)) || (has(r + 1) && has(r + 2))
}
