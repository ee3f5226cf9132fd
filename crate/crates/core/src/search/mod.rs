//! Monte Carlo tree search over sampled determinizations.
//!
//! Both searchers share one action-keyed tree per decision. Plain MCTS samples a
//! single world per iteration and scales exploration by how often an action has
//! been legal at its node so far; ISMCTS samples `d` worlds per iteration and
//! scales by the fraction of them in which the action is legal.

mod belief;

pub use belief::{determinize, determinize_belief, BeliefError, BeliefEvent, BeliefState};

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::engine::{Action, DiscardGroup, Observation, RoundState, PAYMENT_CAP};
use crate::rng::GameRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub iterations: u32,
    pub determinizations: u32,
    pub exploration_c: f64,
    pub max_rollout_depth: u32,
    pub time_limit_ms: Option<u64>,
    /// Coin utilities are divided by this before they enter the UCB formula.
    pub utility_scale: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 1000,
            determinizations: 3,
            exploration_c: std::f64::consts::SQRT_2,
            max_rollout_depth: 200,
            time_limit_ms: Some(1000),
            utility_scale: PAYMENT_CAP as f64,
        }
    }
}

impl SearchConfig {
    /// Iteration budget only, no wall-clock limit.
    pub fn with_iterations(iterations: u32) -> SearchConfig {
        SearchConfig { iterations, time_limit_ms: None, ..SearchConfig::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.iterations < 1 {
            return Err("iterations must be at least 1".into());
        }
        if self.determinizations < 1 {
            return Err("determinizations must be at least 1".into());
        }
        if !self.exploration_c.is_finite() || self.exploration_c <= 0.0 {
            return Err("exploration constant must be positive".into());
        }
        if !self.utility_scale.is_finite() || self.utility_scale <= 0.0 {
            return Err("utility scale must be positive".into());
        }
        Ok(())
    }
}

/// UCB with the exploration term scaled by the legality probability `l / d`.
/// An unvisited action (`n == 0`) has infinite priority.
pub fn ucb_score(mean: f64, parent_visits: f64, visits: u32, legal: u32, d: u32, c: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    ucb_with_probability(mean, parent_visits, visits, legal as f64 / d as f64, c)
}

fn ucb_with_probability(mean: f64, parent_visits: f64, visits: u32, p_legal: f64, c: f64) -> f64 {
    if p_legal == 0.0 {
        return mean;
    }
    mean + c * p_legal * (parent_visits.ln() / visits as f64).sqrt()
}

/// Plays uniformly random legal actions for every seat until the round ends or
/// `max_depth` actions have been played. Returns every seat's coin change
/// (all zeros when the depth cap is hit first).
pub fn rollout_deltas(state: &RoundState, rng: &mut GameRng, max_depth: u32) -> Vec<f64> {
    let mut s = state.clone();
    let mut actions = Vec::with_capacity(32);
    let mut scratch: Vec<DiscardGroup> = Vec::with_capacity(32);
    let mut depth = 0;
    loop {
        if let Some(o) = s.round_termination() {
            return o.coin_delta.iter().map(|&d| d as f64).collect();
        }
        if depth >= max_depth {
            return vec![0.0; s.num_players()];
        }
        s.legal_actions_into(&mut actions, &mut scratch);
        let a = actions[rng.random_range(0..actions.len())];
        s.apply(a, rng).expect("rollout actions are legal");
        depth += 1;
    }
}

/// Random-playout utility for `player`.
pub fn rollout(state: &RoundState, player: usize, rng: &mut GameRng, max_depth: u32) -> f64 {
    rollout_deltas(state, rng, max_depth)[player]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchVariant {
    Mcts,
    Ismcts,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub action: Action,
    pub child: Option<usize>,
    pub visits: u32,
    pub total: f64,
    /// Running mean of the utilities credited to this edge.
    pub mean: f64,
    /// Node visits in which the action was legal in at least one sampled world.
    pub available: u32,
    /// Worlds of the latest batch in which the action was legal.
    pub last_legal: u32,
}

#[derive(Debug, Clone, Default)]
pub struct Node {
    pub visits: u32,
    /// Times a selection pass reached this node.
    pub reached: u32,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    pub nodes: Vec<Node>,
    pub iterations: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionStats {
    pub action: Action,
    pub visits: u32,
    pub mean: f64,
}

impl SearchTree {
    fn new() -> SearchTree {
        SearchTree { nodes: vec![Node::default()], iterations: 0 }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn root_stats(&self) -> Vec<ActionStats> {
        self.root()
            .edges
            .iter()
            .map(|e| ActionStats { action: e.action, visits: e.visits, mean: e.mean })
            .collect()
    }

    /// Visit-count bookkeeping and running means are self-consistent everywhere.
    pub fn is_consistent(&self) -> bool {
        self.nodes.iter().all(|n| {
            let sum: u32 = n.edges.iter().map(|e| e.visits).sum();
            sum <= n.visits
                && n.edges.iter().all(|e| {
                    e.mean.is_finite()
                        && e.available <= n.reached
                        && (e.visits == 0 || (e.mean - e.total / e.visits as f64).abs() < 1e-9)
                })
        })
    }
}

fn edge_index(node: &mut Node, action: Action) -> usize {
    match node.edges.iter().position(|e| e.action == action) {
        Some(i) => i,
        None => {
            node.edges.push(Edge {
                action,
                child: None,
                visits: 0,
                total: 0.0,
                mean: 0.0,
                available: 0,
                last_legal: 0,
            });
            node.edges.len() - 1
        }
    }
}

/// Robust child: most visits, ties broken by the higher mean, then by order of legal actions.
fn best_action(tree: &SearchTree, legal: &[Action]) -> Action {
    let mut best = legal[0];
    let mut best_key = (0u32, f64::NEG_INFINITY);
    for &a in legal {
        let key = tree
            .root()
            .edges
            .iter()
            .find(|e| e.action == a)
            .map(|e| (e.visits, if e.visits > 0 { e.mean } else { f64::NEG_INFINITY }))
            .unwrap_or((0, f64::NEG_INFINITY));
        if key.0 > best_key.0 || (key.0 == best_key.0 && key.1 > best_key.1) {
            best = a;
            best_key = key;
        }
    }
    best
}

struct Scratch {
    actions: Vec<Action>,
    groups: Vec<DiscardGroup>,
    legal_sets: Vec<Vec<Action>>,
}

/// One selection/expansion/rollout/backpropagation pass over the given worlds.
fn iterate(
    tree: &mut SearchTree,
    mut worlds: Vec<RoundState>,
    variant: SearchVariant,
    cfg: &SearchConfig,
    rng: &mut GameRng,
    scratch: &mut Scratch,
) {
    let d = worlds.len() as u32;
    let mut alive: Vec<usize> = (0..worlds.len()).collect();
    let mut node = 0usize;
    let mut path: Vec<(usize, usize, usize)> = Vec::new();
    let mut candidates: Vec<usize> = Vec::new();

    loop {
        let lead = &worlds[alive[0]];
        if lead.round_termination().is_some() {
            break;
        }
        let actor = lead.current_player();

        scratch.legal_sets.resize_with(alive.len(), Vec::new);
        for (k, &w) in alive.iter().enumerate() {
            worlds[w].legal_actions_into(&mut scratch.actions, &mut scratch.groups);
            scratch.legal_sets[k].clear();
            scratch.legal_sets[k].extend_from_slice(&scratch.actions);
        }

        let n = &mut tree.nodes[node];
        n.reached += 1;
        n.edges.iter_mut().for_each(|e| e.last_legal = 0);
        candidates.clear();
        for set in &scratch.legal_sets[..alive.len()] {
            for &a in set {
                let i = edge_index(n, a);
                if n.edges[i].last_legal == 0 {
                    n.edges[i].available += 1;
                    candidates.push(i);
                }
                n.edges[i].last_legal += 1;
            }
        }

        let unvisited: Vec<usize> =
            candidates.iter().copied().filter(|&i| n.edges[i].visits == 0).collect();
        let (chosen, expanding) = if !unvisited.is_empty() {
            (unvisited[rng.random_range(0..unvisited.len())], true)
        } else {
            let parent = n.visits.max(1) as f64;
            let mut best = candidates[0];
            let mut best_score = f64::NEG_INFINITY;
            for &i in &candidates {
                let e = &n.edges[i];
                let mean = e.mean / cfg.utility_scale;
                let score = match variant {
                    SearchVariant::Mcts => ucb_with_probability(
                        mean,
                        parent,
                        e.visits,
                        e.available as f64 / n.reached as f64,
                        cfg.exploration_c,
                    ),
                    SearchVariant::Ismcts => {
                        ucb_score(mean, parent, e.visits, e.last_legal, d, cfg.exploration_c)
                    }
                };
                if score > best_score {
                    best_score = score;
                    best = i;
                }
            }
            (best, false)
        };

        let action = n.edges[chosen].action;
        let mut kept = Vec::with_capacity(alive.len());
        for (k, &w) in alive.iter().enumerate() {
            if scratch.legal_sets[k].contains(&action) {
                kept.push(w);
            }
        }
        alive = kept;
        for &w in &alive {
            worlds[w].apply(action, rng).expect("action legal in this world");
        }
        path.push((node, chosen, actor));

        let child = match tree.nodes[node].edges[chosen].child {
            Some(c) => c,
            None => {
                tree.nodes.push(Node::default());
                let c = tree.nodes.len() - 1;
                tree.nodes[node].edges[chosen].child = Some(c);
                c
            }
        };
        node = child;
        if expanding {
            break;
        }
    }

    let utilities = rollout_deltas(&worlds[alive[0]], rng, cfg.max_rollout_depth);
    for (node, edge, actor) in path {
        let n = &mut tree.nodes[node];
        n.visits += 1;
        let e = &mut n.edges[edge];
        let u = utilities[actor];
        e.visits += 1;
        e.total += u;
        e.mean += (u - e.mean) / e.visits as f64;
    }
    tree.iterations += 1;
}

/// Builds the search tree for the observing seat's decision.
pub fn search(
    obs: &Observation,
    belief: &BeliefState,
    cfg: &SearchConfig,
    variant: SearchVariant,
    rng: &mut GameRng,
) -> Result<SearchTree, BeliefError> {
    let mut tree = SearchTree::new();
    let worlds_per_iteration = match variant {
        SearchVariant::Mcts => 1,
        SearchVariant::Ismcts => cfg.determinizations.max(1),
    };
    let deadline = cfg.time_limit_ms.map(|ms| Instant::now() + Duration::from_millis(ms));
    let mut scratch = Scratch { actions: Vec::new(), groups: Vec::new(), legal_sets: Vec::new() };
    for _ in 0..cfg.iterations.max(1) {
        let worlds = (0..worlds_per_iteration)
            .map(|_| determinize_belief(belief, obs, rng))
            .collect::<Result<Vec<_>, _>>()?;
        iterate(&mut tree, worlds, variant, cfg, rng, &mut scratch);
        if deadline.is_some_and(|t| Instant::now() >= t) {
            break;
        }
    }
    Ok(tree)
}

fn decide(
    obs: &Observation,
    belief: &BeliefState,
    cfg: &SearchConfig,
    variant: SearchVariant,
    rng: &mut GameRng,
) -> Action {
    let legal = obs.legal_actions();
    assert!(!legal.is_empty(), "search called when the observer has no legal action");
    if legal.len() == 1 {
        return legal[0];
    }
    match search(obs, belief, cfg, variant, rng) {
        Ok(tree) => best_action(&tree, &legal),
        // An inconsistent belief cannot be sampled from; fall back to a legal action.
        Err(_) => legal[rng.random_range(0..legal.len())],
    }
}

/// Single-determinization MCTS decision.
pub fn mcts_decide(
    obs: &Observation,
    belief: &BeliefState,
    cfg: &SearchConfig,
    rng: &mut GameRng,
) -> Action {
    decide(obs, belief, cfg, SearchVariant::Mcts, rng)
}

/// Information-set MCTS decision with `cfg.determinizations` worlds per iteration.
pub fn ismcts_decide(
    obs: &Observation,
    belief: &BeliefState,
    cfg: &SearchConfig,
    rng: &mut GameRng,
) -> Action {
    decide(obs, belief, cfg, SearchVariant::Ismcts, rng)
}

#[derive(Debug, Clone)]
pub struct SearchAgent {
    pub variant: SearchVariant,
    pub config: SearchConfig,
}

impl SearchAgent {
    pub fn mcts(config: SearchConfig) -> SearchAgent {
        SearchAgent { variant: SearchVariant::Mcts, config }
    }

    pub fn ismcts(config: SearchConfig) -> SearchAgent {
        SearchAgent { variant: SearchVariant::Ismcts, config }
    }
}

impl Agent for SearchAgent {
    fn name(&self) -> String {
        match self.variant {
            SearchVariant::Mcts => "MCTS".into(),
            SearchVariant::Ismcts => "ISMCTS".into(),
        }
    }

    fn decide(&mut self, obs: &Observation, rng: &mut GameRng) -> Action {
        let belief = BeliefState::from_observation(obs);
        decide(obs, &belief, &self.config, self.variant, rng)
    }
}
