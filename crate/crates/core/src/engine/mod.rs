//! Deterministic Dhumbal rules engine.
//!
//! A round is a [`RoundState`] driven by [`RoundState::apply`] through the phase
//! cycle JhyapCheck -> Discard -> Pick for each seat in turn, until a showdown,
//! an emptied hand, a dead deck or the turn limit ends it.

mod observation;
mod rules;
mod state;

pub use observation::{observation_for, Observation};
pub use rules::{
    can_declare_jhyap, completes_combination, enumerate_into, enumerate_legal_discards,
    hand_value, is_valid_sequence, DiscardGroup, GroupKind, JHYAP_THRESHOLD, PAYMENT_CAP,
};
pub use state::{
    deal, settle_showdown, Action, EndReason, Phase, PickSource, PlayerState, RoundOutcome,
    RoundState, RuleConfig, TurnCounting, HAND_SIZE, MAX_PLAYERS, MIN_PLAYERS, STARTING_COINS,
};

#[cfg(test)]
mod tests;
