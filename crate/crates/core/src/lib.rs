//! Dhumbal: a draw-and-discard card game simulator with rule-based, search-based,
//! learning-based and random agents, tournament orchestration and the statistics
//! used to compare them.

pub mod agent;
pub mod analytics;
pub mod arena;
pub mod card;
pub mod engine;
pub mod error;
pub mod heuristics;
pub mod learning;
pub mod neuralnet;
pub mod rng;
pub mod search;

pub use agent::{Agent, RandomAgent};
pub use card::{card_value, Card, CardSet, Suit};
pub use engine::{Action, Observation, Phase, PickSource, RoundOutcome, RoundState};
pub use error::EngineError;
pub use rng::{seeded, GameRng, DEFAULT_SEED};
