//! Cards, suits and compact card sets.
//!
//! A card is stored as a single byte `suit * 13 + (rank - 1)`, which is also the
//! bit position used by [`CardSet`] and the single-discard slot of the RL action
//! table. Canonical order (used for display and for the top of a discard group)
//! is ascending rank, ties broken by suit order Clubs < Diamonds < Hearts < Spades.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::EngineError;

pub const DECK_SIZE: usize = 52;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Suit {
    Clubs,
    Diamonds,
    Hearts,
    Spades,
}

impl Suit {
    pub const ALL: [Suit; 4] = [Suit::Clubs, Suit::Diamonds, Suit::Hearts, Suit::Spades];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Suit {
        Suit::ALL[i as usize]
    }

    pub fn letter(self) -> char {
        match self {
            Suit::Clubs => 'C',
            Suit::Diamonds => 'D',
            Suit::Hearts => 'H',
            Suit::Spades => 'S',
        }
    }
}

/// Point value of a rank: Ace 1, pips at face value, J/Q/K 11/12/13.
pub fn card_value(rank: u8) -> Result<u32, EngineError> {
    match rank {
        1..=13 => Ok(rank as u32),
        _ => Err(EngineError::RankOutOfRange(rank)),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Card(u8);

impl Card {
    /// Panics if `rank` is outside `1..=13`; use [`Card::try_new`] for untrusted input.
    pub fn new(rank: u8, suit: Suit) -> Card {
        Card::try_new(rank, suit).expect("rank must be in 1..=13")
    }

    pub fn try_new(rank: u8, suit: Suit) -> Result<Card, EngineError> {
        if !(1..=13).contains(&rank) {
            return Err(EngineError::RankOutOfRange(rank));
        }
        Ok(Card(suit.index() * 13 + rank - 1))
    }

    pub fn from_index(index: u8) -> Card {
        assert!((index as usize) < DECK_SIZE, "card index {index} out of range");
        Card(index)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn rank(self) -> u8 {
        self.0 % 13 + 1
    }

    pub fn suit(self) -> Suit {
        Suit::from_index(self.0 / 13)
    }

    pub fn value(self) -> u32 {
        self.rank() as u32
    }

    fn canonical_key(self) -> (u8, u8) {
        (self.rank(), self.suit().index())
    }

    /// All 52 cards in index order.
    pub fn deck() -> impl Iterator<Item = Card> {
        (0..DECK_SIZE as u8).map(Card)
    }
}

impl Ord for Card {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_key().cmp(&other.canonical_key())
    }
}

impl PartialOrd for Card {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rank = match self.rank() {
            1 => "A".to_string(),
            11 => "J".to_string(),
            12 => "Q".to_string(),
            13 => "K".to_string(),
            r => r.to_string(),
        };
        write!(f, "{}{}", rank, self.suit().letter())
    }
}

impl fmt::Debug for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Card {
    type Err = EngineError;

    /// Parses `"AS"`, `"10h"`, `"QD"`, `"7c"` (rank then suit letter, case-insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_uppercase();
        let bad = || EngineError::ParseCard(s.clone());
        let suit_ch = s.chars().last().ok_or_else(bad)?;
        let suit = match suit_ch {
            'C' => Suit::Clubs,
            'D' => Suit::Diamonds,
            'H' => Suit::Hearts,
            'S' => Suit::Spades,
            _ => return Err(bad()),
        };
        let rank = match &s[..s.len() - 1] {
            "A" | "1" => 1,
            "J" => 11,
            "Q" => 12,
            "K" => 13,
            "T" => 10,
            r => r.parse::<u8>().map_err(|_| bad())?,
        };
        Card::try_new(rank, suit).map_err(|_| bad())
    }
}

impl Serialize for Card {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Card {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A set of cards as a 52-bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CardSet(u64);

impl CardSet {
    pub const EMPTY: CardSet = CardSet(0);
    pub const FULL: CardSet = CardSet((1u64 << DECK_SIZE) - 1);

    pub fn from_bits(bits: u64) -> CardSet {
        CardSet(bits & Self::FULL.0)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn single(card: Card) -> CardSet {
        CardSet(1u64 << card.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, card: Card) -> bool {
        self.0 & (1u64 << card.0) != 0
    }

    pub fn insert(&mut self, card: Card) -> bool {
        let had = self.contains(card);
        self.0 |= 1u64 << card.0;
        !had
    }

    pub fn remove(&mut self, card: Card) -> bool {
        let had = self.contains(card);
        self.0 &= !(1u64 << card.0);
        had
    }

    pub fn union(self, other: CardSet) -> CardSet {
        CardSet(self.0 | other.0)
    }

    pub fn intersection(self, other: CardSet) -> CardSet {
        CardSet(self.0 & other.0)
    }

    pub fn difference(self, other: CardSet) -> CardSet {
        CardSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: CardSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: CardSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Sum of card point values.
    pub fn value(self) -> u32 {
        self.iter().map(Card::value).sum()
    }

    /// Cards in index order (suit-major). Use [`CardSet::canonical`] for display order.
    pub fn iter(self) -> impl Iterator<Item = Card> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as u8;
            bits &= bits - 1;
            Some(Card(i))
        })
    }

    /// Cards in canonical order: ascending rank, then suit.
    pub fn canonical(self) -> Vec<Card> {
        let mut v: Vec<Card> = self.iter().collect();
        v.sort_unstable();
        v
    }

    /// Last card in canonical order.
    pub fn top(self) -> Option<Card> {
        self.iter().max()
    }

    /// Bitmask of the 13 ranks held in `suit` (bit `rank - 1`).
    pub fn suit_mask(self, suit: Suit) -> u16 {
        ((self.0 >> (suit.index() as u64 * 13)) & 0x1fff) as u16
    }

    /// Cards of a given rank, one per suit held.
    pub fn of_rank(self, rank: u8) -> CardSet {
        let mut out = CardSet::EMPTY;
        for suit in Suit::ALL {
            let c = Card::new(rank, suit);
            if self.contains(c) {
                out.insert(c);
            }
        }
        out
    }
}

impl FromIterator<Card> for CardSet {
    fn from_iter<T: IntoIterator<Item = Card>>(iter: T) -> Self {
        let mut s = CardSet::EMPTY;
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl fmt::Debug for CardSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.canonical()).finish()
    }
}

impl fmt::Display for CardSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.canonical().iter().map(Card::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl Serialize for CardSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.canonical().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CardSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let cards = Vec::<Card>::deserialize(d)?;
        Ok(cards.into_iter().collect())
    }
}

/// Parses a whitespace- or comma-separated card list such as `"5H 5S 2C"`.
pub fn parse_cards(s: &str) -> Result<Vec<Card>, EngineError> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}
