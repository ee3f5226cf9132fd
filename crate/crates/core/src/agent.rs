use rand::Rng;

use crate::engine::{Action, Observation};
use crate::heuristics::HeuristicAgent;
use crate::rng::GameRng;

/// Anything that can choose an action from an observation.
///
/// Agents must return an action legal for the observation; the arena treats an
/// illegal answer as an invalid action.
pub trait Agent: Send {
    fn name(&self) -> String;

    fn decide(&mut self, obs: &Observation, rng: &mut GameRng) -> Action;
}

/// Uniform choice over the legal actions of the current phase.
pub fn random_decide(obs: &Observation, rng: &mut GameRng) -> Action {
    let legal = obs.legal_actions();
    assert!(!legal.is_empty(), "random_decide called with no legal action");
    legal[rng.random_range(0..legal.len())]
}

#[derive(Debug, Clone, Default)]
pub struct RandomAgent;

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "Random".into()
    }

    fn decide(&mut self, obs: &Observation, rng: &mut GameRng) -> Action {
        random_decide(obs, rng)
    }
}

impl Agent for HeuristicAgent {
    fn name(&self) -> String {
        self.profile.kind.name().into()
    }

    fn decide(&mut self, obs: &Observation, rng: &mut GameRng) -> Action {
        HeuristicAgent::decide(self, obs, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::{parse_cards, CardSet};
    use crate::engine::{deal, enumerate_legal_discards, observation_for, Phase};
    use crate::rng::seeded;

    #[test]
    fn single_legal_action_is_returned() {
        let s = deal(2, &mut seeded(0)).unwrap();
        let mut o = observation_for(&s, 0).unwrap();
        o.own_hand = parse_cards("KC QD").unwrap().into_iter().collect();
        assert_eq!(random_decide(&o, &mut seeded(1)), Action::Decline);
    }

    #[test]
    fn declares_half_the_time_when_eligible() {
        let s = deal(2, &mut seeded(0)).unwrap();
        let mut o = observation_for(&s, 0).unwrap();
        o.own_hand = parse_cards("AC 2D").unwrap().into_iter().collect();
        let mut rng = seeded(42);
        let n = 100_000;
        let declared = (0..n).filter(|_| random_decide(&o, &mut rng) == Action::DeclareJhyap).count();
        assert!((declared as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn discard_choice_is_uniform() {
        let s = deal(2, &mut seeded(0)).unwrap();
        let mut o = observation_for(&s, 0).unwrap();
        o.own_hand = parse_cards("5H 5S 5D 2C 9H").unwrap().into_iter().collect::<CardSet>();
        o.phase = Phase::Discard;
        let groups = enumerate_legal_discards(o.own_hand).unwrap();
        let k = groups.len();
        let mut counts = vec![0usize; k];
        let mut rng = seeded(7);
        let n = 90_000;
        for _ in 0..n {
            let Action::Discard(g) = random_decide(&o, &mut rng) else { panic!() };
            counts[groups.iter().position(|x| *x == g).unwrap()] += 1;
        }
        let expected = n as f64 / k as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square critical value for 8 degrees of freedom at p = 0.001
        assert!(chi2 < 26.12, "chi2 = {chi2}");
    }
}
