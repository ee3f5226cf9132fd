use thiserror::Error;

use crate::engine::Phase;

/// Rule and state violations raised by the engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("rank {0} is outside 1..=13")]
    RankOutOfRange(u8),
    #[error("cannot parse card {0:?}")]
    ParseCard(String),
    #[error("player count {0} is outside 2..=5")]
    PlayerCount(usize),
    #[error("player index {0} is out of range")]
    InvalidPlayer(usize),
    #[error("hand is empty")]
    EmptyHand,
    #[error("illegal discard: {0}")]
    IllegalDiscard(String),
    #[error("action not allowed in {actual:?} phase (expected {expected:?})")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("no pickable discard-top card")]
    NoDiscardTop,
    #[error("stock is empty")]
    EmptyStock,
    #[error("Jhyap can only be declared when the hand value is 10 points or fewer (hand value is {0})")]
    CannotDeclare(u32),
    #[error("round is already over")]
    RoundOver,
}
