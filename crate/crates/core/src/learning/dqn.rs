use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::learning::encoding::{NUM_ACTIONS, STATE_DIM};
use crate::neuralnet::{Activation, Adam, DenseNet, Gradients, NetError};
use crate::rng::GameRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
    pub target_sync_every: u64,
    pub lr: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay: 0.995,
            target_sync_every: 100,
            lr: 1e-4,
            buffer_capacity: 2000,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// Legal actions in `next_state`; ignored when `done`.
    pub next_mask: [bool; NUM_ACTIONS],
    pub done: bool,
}

/// Fixed-capacity FIFO replay memory.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        ReplayBuffer { capacity, items: VecDeque::with_capacity(capacity) }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `batch` distinct transitions chosen uniformly.
    pub fn sample(&self, batch: usize, rng: &mut GameRng) -> Vec<&Transition> {
        sample(rng, self.items.len(), batch).into_iter().map(|i| &self.items[i]).collect()
    }
}

/// Index of the largest value among the legal entries (lowest index on ties).
pub fn masked_argmax(values: &[f64], mask: &[bool; NUM_ACTIONS]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in 0..values.len().min(NUM_ACTIONS) {
        if mask[i] && best.is_none_or(|b| values[i] > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// ε-greedy over the legal indices.
pub fn dqn_select(
    net: &DenseNet,
    state: &[f64],
    epsilon: f64,
    mask: &[bool; NUM_ACTIONS],
    rng: &mut GameRng,
) -> usize {
    let legal: Vec<usize> = (0..NUM_ACTIONS).filter(|&i| mask[i]).collect();
    assert!(!legal.is_empty(), "dqn_select needs at least one legal index");
    if legal.len() == 1 {
        return legal[0];
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return legal[rng.random_range(0..legal.len())];
    }
    let q = net.forward(state).expect("state has the network's input width");
    masked_argmax(&q, mask).expect("non-empty mask")
}

pub fn q_network(rng: &mut GameRng) -> DenseNet {
    DenseNet::new(
        &[STATE_DIM, 128, 64, NUM_ACTIONS],
        &[Activation::Relu, Activation::Relu, Activation::Linear],
        rng,
    )
    .expect("fixed architecture is valid")
}

/// Online and target networks with their optimizer and replay memory.
#[derive(Debug, Clone)]
pub struct DqnLearner {
    pub online: DenseNet,
    pub target: DenseNet,
    pub adam: Adam,
    pub buffer: ReplayBuffer,
    pub config: DqnConfig,
    pub epsilon: f64,
    pub train_steps: u64,
}

impl DqnLearner {
    pub fn new(config: DqnConfig, rng: &mut GameRng) -> DqnLearner {
        DqnLearner::from_net(q_network(rng), config)
    }

    pub fn from_net(online: DenseNet, config: DqnConfig) -> DqnLearner {
        DqnLearner {
            target: online.clone(),
            adam: Adam::new(&online, config.lr),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            epsilon: config.epsilon_start,
            train_steps: 0,
            online,
            config,
        }
    }

    pub fn select(&self, state: &[f64], mask: &[bool; NUM_ACTIONS], rng: &mut GameRng) -> usize {
        dqn_select(&self.online, state, self.epsilon, mask, rng)
    }

    pub fn end_episode(&mut self) {
        self.epsilon = (self.epsilon * self.config.epsilon_decay).max(self.config.epsilon_end);
    }

    pub fn train_step(&mut self, rng: &mut GameRng) -> Option<f64> {
        dqn_train_step(
            &mut self.online,
            &mut self.target,
            &mut self.adam,
            &self.buffer,
            &self.config,
            &mut self.train_steps,
            rng,
        )
        .expect("network shapes are fixed")
    }
}

/// TD target `r` for terminal transitions, otherwise `r + γ · max_legal Q_target(s')`.
pub fn td_target(target: &DenseNet, t: &Transition, gamma: f64) -> Result<f64, NetError> {
    if t.done {
        return Ok(t.reward);
    }
    let q = target.forward(&t.next_state)?;
    Ok(match masked_argmax(&q, &t.next_mask) {
        Some(i) => t.reward + gamma * q[i],
        None => t.reward,
    })
}

/// One minibatch update. Returns `Ok(None)` when the buffer holds fewer than a batch.
/// The target network is synchronised after every `target_sync_every`-th call that trains.
pub fn dqn_train_step(
    online: &mut DenseNet,
    target: &mut DenseNet,
    adam: &mut Adam,
    buffer: &ReplayBuffer,
    cfg: &DqnConfig,
    train_steps: &mut u64,
    rng: &mut GameRng,
) -> Result<Option<f64>, NetError> {
    if buffer.len() < cfg.batch_size || cfg.batch_size == 0 {
        return Ok(None);
    }
    let batch = buffer.sample(cfg.batch_size, rng);
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(online);
    let mut loss = 0.0;
    let mut out_grad = vec![0.0; online.output_dim()];
    for t in batch {
        let y = td_target(target, t, cfg.gamma)?;
        let trace = online.forward_trace(&t.state)?;
        let err = trace.output()[t.action] - y;
        loss += err * err / n;
        out_grad.iter_mut().for_each(|g| *g = 0.0);
        out_grad[t.action] = 2.0 * err / n;
        online.backward_into(&trace, &out_grad, &mut grads)?;
    }
    adam.step(online, &grads)?;
    *train_steps += 1;
    if cfg.target_sync_every > 0 && *train_steps % cfg.target_sync_every == 0 {
        *target = online.clone();
    }
    Ok(Some(loss))
}
