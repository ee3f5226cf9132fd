use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, RandomAgent};
use crate::arena::play_round;
use crate::engine::{Action, Observation, RoundState, RuleConfig, STARTING_COINS};
use crate::heuristics::{HeuristicAgent, ProfileKind};
use crate::learning::dqn::{masked_argmax, DqnConfig, DqnLearner, Transition};
use crate::learning::encoding::{encode_state, index_to_action, legal_action_mask};
use crate::learning::env::RoundEnv;
use crate::learning::ppo::{PpoConfig, PpoLearner, PpoSample};
use crate::neuralnet::{DenseNet, NetCheckpoint, NetError};
use crate::rng::{seeded, GameRng};

pub const DQN_CONVERGENCE_THRESHOLD: f64 = 0.05;
pub const PPO_CONVERGENCE_THRESHOLD: f64 = 0.02;
pub const CONVERGENCE_WINDOW: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Dqn,
    Ppo,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Dqn => "DQN",
            LearnerKind::Ppo => "PPO",
        }
    }

    pub fn convergence_threshold(self) -> f64 {
        match self {
            LearnerKind::Dqn => DQN_CONVERGENCE_THRESHOLD,
            LearnerKind::Ppo => PPO_CONVERGENCE_THRESHOLD,
        }
    }
}

/// Fixed opponents used for training and validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpponentKind {
    Random,
    Aggressive,
    Conservative,
    Balanced,
    Opportunistic,
}

impl OpponentKind {
    pub const MIXED: [OpponentKind; 4] = [
        OpponentKind::Aggressive,
        OpponentKind::Conservative,
        OpponentKind::Balanced,
        OpponentKind::Opportunistic,
    ];

    pub fn build(self) -> Box<dyn Agent> {
        match self {
            OpponentKind::Random => Box::new(RandomAgent),
            OpponentKind::Aggressive => Box::new(HeuristicAgent::new(ProfileKind::Aggressive)),
            OpponentKind::Conservative => Box::new(HeuristicAgent::new(ProfileKind::Conservative)),
            OpponentKind::Balanced => Box::new(HeuristicAgent::new(ProfileKind::Balanced)),
            OpponentKind::Opportunistic => Box::new(HeuristicAgent::new(ProfileKind::Opportunistic)),
        }
    }
}

impl std::str::FromStr for OpponentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(OpponentKind::Random),
            "aggressive" => Ok(OpponentKind::Aggressive),
            "conservative" => Ok(OpponentKind::Conservative),
            "balanced" => Ok(OpponentKind::Balanced),
            "opportunistic" => Ok(OpponentKind::Opportunistic),
            other => Err(format!("unknown opponent '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub kind: LearnerKind,
    pub episodes: u32,
    pub seed: u64,
    pub players: usize,
    /// Assigned to the non-learner seats in order, cycling if shorter.
    pub opponents: Vec<OpponentKind>,
    /// Emit a checkpoint every this many episodes (0 = only at the end).
    pub checkpoint_every: u32,
    pub stop_at_convergence: bool,
    pub dqn: DqnConfig,
    pub ppo: PpoConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kind: LearnerKind::Ppo,
            episodes: 200,
            seed: crate::rng::DEFAULT_SEED,
            players: 5,
            opponents: OpponentKind::MIXED.to_vec(),
            checkpoint_every: 1000,
            stop_at_convergence: false,
            dqn: DqnConfig::default(),
            ppo: PpoConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Parses a TOML training config; missing keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<TrainConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: u32,
    pub reward: f64,
    pub win: bool,
    pub length: u32,
    pub loss: Option<f64>,
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// A saved policy (DQN online network or PPO actor, plus the PPO critic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerCheckpoint {
    pub format_version: u32,
    pub kind: LearnerKind,
    pub episode: u32,
    pub policy: NetCheckpoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<NetCheckpoint>,
}

impl LearnerCheckpoint {
    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        let text = serde_json::to_string(self).map_err(|e| NetError::Parse(e.to_string()))?;
        fs::write(path, text).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<LearnerCheckpoint, NetError> {
        let text = fs::read_to_string(path).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))?;
        let c: LearnerCheckpoint = serde_json::from_str(&text).map_err(|e| NetError::Parse(e.to_string()))?;
        if c.format_version != CHECKPOINT_VERSION {
            return Err(NetError::Parse(format!("unsupported format_version {}", c.format_version)));
        }
        c.policy.to_net()?;
        Ok(c)
    }

    pub fn agent(&self) -> Result<LearnedAgent, NetError> {
        Ok(LearnedAgent { kind: self.kind, net: self.policy.to_net()? })
    }
}

/// Greedy evaluation policy: the legal index with the highest network output
/// (Q-value for DQN, logit for PPO).
#[derive(Debug, Clone)]
pub struct LearnedAgent {
    pub kind: LearnerKind,
    pub net: DenseNet,
}

impl LearnedAgent {
    pub fn choose_index(&self, obs: &Observation) -> Option<usize> {
        let mask = legal_action_mask(obs);
        let out = self.net.forward(&encode_state(obs)).ok()?;
        masked_argmax(&out, &mask)
    }
}

impl Agent for LearnedAgent {
    fn name(&self) -> String {
        self.kind.name().into()
    }

    fn decide(&mut self, obs: &Observation, rng: &mut GameRng) -> Action {
        match self.choose_index(obs).and_then(|i| index_to_action(i, obs)) {
            Some(a) => a,
            None => crate::agent::random_decide(obs, rng),
        }
    }
}

pub enum Learner {
    Dqn(DqnLearner),
    Ppo(PpoLearner),
}

impl Learner {
    pub fn new(cfg: &TrainConfig, rng: &mut GameRng) -> Learner {
        match cfg.kind {
            LearnerKind::Dqn => Learner::Dqn(DqnLearner::new(cfg.dqn, rng)),
            LearnerKind::Ppo => Learner::Ppo(PpoLearner::new(cfg.ppo, rng)),
        }
    }

    pub fn checkpoint(&self, episode: u32) -> LearnerCheckpoint {
        match self {
            Learner::Dqn(l) => LearnerCheckpoint {
                format_version: CHECKPOINT_VERSION,
                kind: LearnerKind::Dqn,
                episode,
                policy: NetCheckpoint::from_net(&l.online, Some(&l.adam)),
                value: None,
            },
            Learner::Ppo(l) => LearnerCheckpoint {
                format_version: CHECKPOINT_VERSION,
                kind: LearnerKind::Ppo,
                episode,
                policy: NetCheckpoint::from_net(&l.actor, Some(&l.actor_adam)),
                value: Some(NetCheckpoint::from_net(&l.critic, Some(&l.critic_adam))),
            },
        }
    }
}

pub struct TrainOutput {
    pub logs: Vec<EpisodeLog>,
    pub checkpoints: Vec<LearnerCheckpoint>,
    /// First episode after which the win-rate series passed the convergence check.
    pub converged_at: Option<u32>,
    pub learner: Learner,
}

fn opponents_for(cfg: &TrainConfig) -> Vec<Box<dyn Agent>> {
    let lineup = if cfg.opponents.is_empty() { &OpponentKind::MIXED[..] } else { &cfg.opponents[..] };
    (0..cfg.players - 1).map(|i| lineup[i % lineup.len()].build()).collect()
}

fn run_episode(
    learner: &mut Learner,
    rollout: &mut Vec<PpoSample>,
    cfg: &TrainConfig,
    episode: u32,
    rng: &mut GameRng,
) -> EpisodeLog {
    let seat = rng.random_range(0..cfg.players);
    let state = RoundState::deal_with(&vec![STARTING_COINS; cfg.players], RuleConfig::default(), 0, rng)
        .expect("player count validated");
    let mut env = RoundEnv::new(state, seat, opponents_for(cfg));
    env.advance(rng);
    let mut total = 0.0;
    let mut loss_sum = 0.0;
    let mut loss_n = 0u32;
    while !env.is_done() {
        let obs = env.observation();
        let s = encode_state(&obs);
        let mask = legal_action_mask(&obs);
        match learner {
            Learner::Dqn(l) => {
                let a = l.select(&s, &mask, rng);
                let r = env.step(a, rng);
                total += r.reward;
                let (next_state, next_mask) = if r.done {
                    (vec![0.0; s.len()], [false; crate::learning::encoding::NUM_ACTIONS])
                } else {
                    let o = env.observation();
                    (encode_state(&o), legal_action_mask(&o))
                };
                l.buffer.push(Transition { state: s, action: a, reward: r.reward, next_state, next_mask, done: r.done });
                if let Some(loss) = l.train_step(rng) {
                    loss_sum += loss;
                    loss_n += 1;
                }
            }
            Learner::Ppo(l) => {
                let (a, log_prob) = crate::learning::ppo::ppo_select(&l.actor, &s, &mask, rng);
                let value = l.value(&s);
                let r = env.step(a, rng);
                total += r.reward;
                rollout.push(PpoSample { state: s, mask, action: a, log_prob, value, reward: r.reward, done: r.done });
            }
        }
    }
    if env.steps() == 0 {
        total += env.outcome().map_or(0.0, |o| o.coin_delta[seat] as f64);
    }
    let loss = match learner {
        Learner::Dqn(l) => {
            l.end_episode();
            (loss_n > 0).then(|| loss_sum / loss_n as f64)
        }
        Learner::Ppo(l) => {
            let last = episode == cfg.episodes;
            if rollout.is_empty() || (rollout.len() < l.config.rollout_steps && !last) {
                None
            } else {
                let st = l.update(rollout, rng).expect("network shapes are fixed");
                rollout.clear();
                Some(st.total(&l.config))
            }
        }
    };
    EpisodeLog {
        episode,
        reward: total,
        win: env.outcome().and_then(|o| o.winner) == Some(seat),
        length: env.steps(),
        loss,
    }
}

/// Trains one learner for `cfg.episodes` single-round episodes at a random seat
/// among fixed opponents.
pub fn train(cfg: &TrainConfig) -> TrainOutput {
    assert!((2..=5).contains(&cfg.players), "2 to 5 players");
    let mut rng = seeded(cfg.seed);
    let mut learner = Learner::new(cfg, &mut rng);
    let mut logs = Vec::with_capacity(cfg.episodes as usize);
    let mut checkpoints = Vec::new();
    let mut converged_at = None;
    let mut wins = Vec::with_capacity(cfg.episodes as usize);
    let mut rollout = Vec::new();
    for episode in 1..=cfg.episodes {
        let log = run_episode(&mut learner, &mut rollout, cfg, episode, &mut rng);
        wins.push(if log.win { 1.0 } else { 0.0 });
        logs.push(log);
        if cfg.checkpoint_every > 0 && episode % cfg.checkpoint_every == 0 {
            checkpoints.push(learner.checkpoint(episode));
        }
        if converged_at.is_none()
            && convergence_check(&wins, CONVERGENCE_WINDOW, cfg.kind.convergence_threshold())
        {
            converged_at = Some(episode);
            if cfg.stop_at_convergence {
                break;
            }
        }
    }
    let last = logs.last().map(|l| l.episode);
    if let Some(ep) = last {
        if checkpoints.last().map(|c| c.episode) != Some(ep) {
            checkpoints.push(learner.checkpoint(ep));
        }
    }
    TrainOutput { logs, checkpoints, converged_at, learner }
}

/// True iff the means of the last two `window`-long blocks differ by less than `threshold`.
pub fn convergence_check(series: &[f64], window: usize, threshold: f64) -> bool {
    if window == 0 || series.len() < 2 * window {
        return false;
    }
    let n = series.len();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let last = mean(&series[n - window..]);
    let prev = mean(&series[n - 2 * window..n - window]);
    (last - prev).abs() < threshold
}

/// Win rate of a greedy checkpoint over `rounds` fresh rounds at random seats.
pub fn validation_win_rate(
    checkpoint: &LearnerCheckpoint,
    opponents: &[OpponentKind],
    players: usize,
    rounds: u32,
    seed: u64,
) -> Result<f64, NetError> {
    let policy = checkpoint.agent()?;
    let lineup = if opponents.is_empty() { &OpponentKind::MIXED[..] } else { opponents };
    let mut rng = seeded(seed);
    let mut wins = 0u32;
    for r in 0..rounds {
        let seat = rng.random_range(0..players);
        let mut it = (0..players - 1).map(|i| lineup[i % lineup.len()].build());
        let mut agents: Vec<Box<dyn Agent>> = (0..players)
            .map(|s| if s == seat { Box::new(policy.clone()) as Box<dyn Agent> } else { it.next().expect("enough opponents") })
            .collect();
        let mut state = RoundState::deal_with(&vec![STARTING_COINS; players], RuleConfig::default(), r, &mut rng)
            .expect("player count validated");
        let played = play_round(&mut state, &mut agents, &mut rng);
        if played.outcome.winner == Some(seat) {
            wins += 1;
        }
    }
    Ok(wins as f64 / rounds.max(1) as f64)
}

/// Picks the checkpoint with the best validation win rate; ties go to the later one.
/// Returns its index and every checkpoint's win rate.
pub fn checkpoint_select(
    checkpoints: &[LearnerCheckpoint],
    opponents: &[OpponentKind],
    players: usize,
    rounds: u32,
    seed: u64,
) -> Result<(usize, Vec<f64>), NetError> {
    if checkpoints.is_empty() {
        return Err(NetError::Architecture("no checkpoints to choose from".into()));
    }
    let rates = checkpoints
        .iter()
        .map(|c| validation_win_rate(c, opponents, players, rounds, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((select_best(&rates), rates))
}

/// Index of the maximum, preferring later entries on ties.
pub fn select_best(rates: &[f64]) -> usize {
    let mut best = 0;
    for (i, &r) in rates.iter().enumerate() {
        if r >= rates[best] {
            best = i;
        }
    }
    best
}

/// Writes the per-episode curve as CSV: episode, reward, win, length, loss.
pub fn write_training_log(logs: &[EpisodeLog], path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "reward", "win", "length", "loss"])?;
    for l in logs {
        w.write_record([
            l.episode.to_string(),
            l.reward.to_string(),
            (l.win as u8).to_string(),
            l.length.to_string(),
            l.loss.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
