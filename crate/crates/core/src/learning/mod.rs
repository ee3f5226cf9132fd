//! Reinforcement learners (DQN and PPO) over a fixed 117-feature state encoding
//! and a 128-slot action table with legality masking.

pub mod dqn;
pub mod encoding;
pub mod env;
pub mod ppo;
pub mod train;

pub use dqn::{DqnConfig, DqnLearner, ReplayBuffer, Transition};
pub use encoding::{encode_state, index_to_action, legal_action_mask, NUM_ACTIONS, STATE_DIM};
pub use env::RoundEnv;
pub use ppo::{PpoConfig, PpoLearner, PpoSample};
pub use train::{
    checkpoint_select, convergence_check, train, EpisodeLog, LearnedAgent, LearnerCheckpoint,
    LearnerKind, OpponentKind, TrainConfig, TrainOutput, write_training_log,
};
