use rand::Rng;

use crate::agent::Agent;
use crate::engine::{observation_for, Action, Observation, RoundOutcome, RoundState};
use crate::learning::encoding::index_to_action;
use crate::rng::GameRng;

pub const VALID_MOVE_REWARD: f64 = 1.0;
pub const INVALID_ACTION_REWARD: f64 = -10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardEvent {
    ValidDiscard,
    ValidPick,
    /// Declaring or declining Jhyap; the showdown itself pays through settlement.
    JhyapDecision,
    Invalid,
    /// The learner's coin change when the round settles.
    Settlement(i64),
}

pub fn reward(event: RewardEvent) -> f64 {
    match event {
        RewardEvent::ValidDiscard | RewardEvent::ValidPick => VALID_MOVE_REWARD,
        RewardEvent::JhyapDecision => 0.0,
        RewardEvent::Invalid => INVALID_ACTION_REWARD,
        RewardEvent::Settlement(delta) => delta as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub done: bool,
    pub invalid: bool,
    /// The action actually applied (a random legal substitute after an invalid index).
    pub applied: Action,
    pub outcome: Option<RoundOutcome>,
}

/// One round seen from a single learning seat; every other seat is played by
/// its own agent between learner decisions.
pub struct RoundEnv {
    state: RoundState,
    seat: usize,
    /// Indexed by seat; the learner's slot is `None`.
    others: Vec<Option<Box<dyn Agent>>>,
    steps: u32,
}

impl RoundEnv {
    /// `opponents` fill the non-learner seats in increasing seat order.
    pub fn new(state: RoundState, seat: usize, opponents: Vec<Box<dyn Agent>>) -> RoundEnv {
        let n = state.num_players();
        assert!(seat < n && opponents.len() == n - 1, "one opponent per other seat");
        let mut it = opponents.into_iter();
        let others = (0..n).map(|s| if s == seat { None } else { it.next() }).collect();
        RoundEnv { state, seat, others, steps: 0 }
    }

    /// Plays the other seats until the learner must act or the round is over.
    pub fn advance(&mut self, rng: &mut GameRng) {
        while !self.state.is_terminal() && self.state.current_player() != self.seat {
            let p = self.state.current_player();
            let obs = observation_for(&self.state, p).expect("seat in range");
            let agent = self.others[p].as_mut().expect("non-learner seat has an agent");
            let mut a = agent.decide(&obs, rng);
            if !self.state.is_legal(&a) {
                let legal = self.state.legal_actions();
                a = legal[rng.random_range(0..legal.len())];
            }
            self.state.apply(a, rng).expect("legal action");
        }
    }

    pub fn observation(&self) -> Observation {
        observation_for(&self.state, self.seat).expect("seat in range")
    }

    pub fn is_done(&self) -> bool {
        self.state.is_terminal()
    }

    pub fn outcome(&self) -> Option<&RoundOutcome> {
        self.state.outcome()
    }

    pub fn seat(&self) -> usize {
        self.seat
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn state(&self) -> &RoundState {
        &self.state
    }

    /// Applies the learner's action index, then lets the other seats play.
    /// An index that is not legal earns the invalid-action reward and a uniformly
    /// random legal action is played instead. The settlement is added to the
    /// reward of the step on which the round ends.
    pub fn step(&mut self, index: usize, rng: &mut GameRng) -> StepResult {
        assert!(!self.is_done() && self.state.current_player() == self.seat, "learner is not to act");
        let obs = self.observation();
        let (action, invalid) = match index_to_action(index, &obs) {
            Some(a) => (a, false),
            None => {
                let legal = self.state.legal_actions();
                (legal[rng.random_range(0..legal.len())], true)
            }
        };
        let mut r = if invalid {
            reward(RewardEvent::Invalid)
        } else {
            match action {
                Action::Discard(_) => reward(RewardEvent::ValidDiscard),
                Action::Pick(_) => reward(RewardEvent::ValidPick),
                _ => reward(RewardEvent::JhyapDecision),
            }
        };
        self.state.apply(action, rng).expect("legal action");
        self.steps += 1;
        self.advance(rng);
        let outcome = self.state.outcome().cloned();
        if let Some(o) = &outcome {
            r += reward(RewardEvent::Settlement(o.coin_delta[self.seat]));
        }
        StepResult { reward: r, done: outcome.is_some(), invalid, applied: action, outcome }
    }
}
