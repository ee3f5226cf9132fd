use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::learning::encoding::{NUM_ACTIONS, STATE_DIM};
use crate::neuralnet::{Activation, Adam, DenseNet, Gradients, NetError};
use crate::rng::GameRng;

const NORMALIZE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub lr: f64,
    /// Learner steps collected (whole episodes only) before each update.
    pub rollout_steps: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            epochs: 5,
            minibatch: 16,
            entropy_coef: 0.01,
            value_coef: 0.5,
            lr: 1e-4,
            rollout_steps: 1024,
        }
    }
}

/// One learner decision with what the update needs later.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoSample {
    pub state: Vec<f64>,
    pub mask: [bool; NUM_ACTIONS],
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

/// Softmax over the legal entries; illegal entries get probability exactly 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool; NUM_ACTIONS]) -> Vec<f64> {
    let m = logits
        .iter()
        .zip(mask)
        .filter(|(_, &ok)| ok)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> =
        logits.iter().zip(mask).map(|(&z, &ok)| if ok { (z - m).exp() } else { 0.0 }).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// Raw generalized advantage estimates; `last_value` bootstraps past the final step.
pub fn gae_raw(rewards: &[f64], values: &[f64], dones: &[bool], last_value: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    assert!(rewards.len() == values.len() && values.len() == dones.len(), "equal-length inputs");
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
    }
    adv
}

/// Zero mean, unit (population) variance; the deviation is floored at 1e-8.
pub fn normalize(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt().max(NORMALIZE_EPS);
    xs.iter().map(|x| (x - mean) / sd).collect()
}

pub fn gae(rewards: &[f64], values: &[f64], dones: &[bool], last_value: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    normalize(&gae_raw(rewards, values, dones, last_value, gamma, lambda))
}

/// The clipped surrogate `min(ρA, clip(ρ, 1−ε, 1+ε)·A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// Per-sample policy terms and the gradient of
/// `−surrogate − entropy_coef · entropy` with respect to the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTerms {
    pub surrogate: f64,
    pub entropy: f64,
    pub logit_grad: Vec<f64>,
}

pub fn policy_terms(
    logits: &[f64],
    mask: &[bool; NUM_ACTIONS],
    action: usize,
    old_log_prob: f64,
    advantage: f64,
    clip: f64,
    entropy_coef: f64,
) -> PolicyTerms {
    let p = masked_softmax(logits, mask);
    let log_p = p[action].ln();
    let ratio = (log_p - old_log_prob).exp();
    let surrogate = clipped_surrogate(ratio, advantage, clip);
    let clipped_out = (advantage >= 0.0 && ratio > 1.0 + clip) || (advantage < 0.0 && ratio < 1.0 - clip);
    // d surrogate / d log π(a)
    let ds = if clipped_out { 0.0 } else { ratio * advantage };
    let h = entropy(&p);
    let mut g = vec![0.0; logits.len()];
    for j in 0..logits.len() {
        if !mask[j] {
            continue;
        }
        let dlogp = if j == action { 1.0 - p[j] } else { -p[j] };
        let dh = -p[j] * (p[j].ln() + h);
        g[j] = -ds * dlogp - entropy_coef * dh;
    }
    PolicyTerms { surrogate, entropy: h, logit_grad: g }
}

pub fn actor_network(rng: &mut GameRng) -> DenseNet {
    DenseNet::new(
        &[STATE_DIM, 128, 64, NUM_ACTIONS],
        &[Activation::Relu, Activation::Relu, Activation::Linear],
        rng,
    )
    .expect("fixed architecture is valid")
}

pub fn critic_network(rng: &mut GameRng) -> DenseNet {
    DenseNet::new(&[STATE_DIM, 128, 64, 1], &[Activation::Relu, Activation::Relu, Activation::Linear], rng)
        .expect("fixed architecture is valid")
}

/// Samples from the masked policy; returns the index and its log-probability.
pub fn ppo_select(actor: &DenseNet, state: &[f64], mask: &[bool; NUM_ACTIONS], rng: &mut GameRng) -> (usize, f64) {
    let logits = actor.forward(state).expect("state has the network's input width");
    let p = masked_softmax(&logits, mask);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &pi) in p.iter().enumerate() {
        if pi <= 0.0 {
            continue;
        }
        acc += pi;
        last = Some(i);
        if u < acc {
            return (i, pi.ln());
        }
    }
    let i = last.expect("at least one legal index");
    (i, p[i].ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

impl PpoStats {
    pub fn total(&self, cfg: &PpoConfig) -> f64 {
        self.policy_loss + cfg.value_coef * self.value_loss - cfg.entropy_coef * self.entropy
    }
}

#[derive(Debug, Clone)]
pub struct PpoLearner {
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub actor_adam: Adam,
    pub critic_adam: Adam,
    pub config: PpoConfig,
}

impl PpoLearner {
    pub fn new(config: PpoConfig, rng: &mut GameRng) -> PpoLearner {
        let actor = actor_network(rng);
        let critic = critic_network(rng);
        PpoLearner::from_nets(actor, critic, config)
    }

    pub fn from_nets(actor: DenseNet, critic: DenseNet, config: PpoConfig) -> PpoLearner {
        PpoLearner {
            actor_adam: Adam::new(&actor, config.lr),
            critic_adam: Adam::new(&critic, config.lr),
            actor,
            critic,
            config,
        }
    }

    pub fn value(&self, state: &[f64]) -> f64 {
        self.critic.forward(state).expect("state has the network's input width")[0]
    }

    /// Advantages and value targets for a finished trajectory.
    pub fn advantages(&self, batch: &[PpoSample]) -> (Vec<f64>, Vec<f64>) {
        let rewards: Vec<f64> = batch.iter().map(|s| s.reward).collect();
        let values: Vec<f64> = batch.iter().map(|s| s.value).collect();
        let dones: Vec<bool> = batch.iter().map(|s| s.done).collect();
        let raw = gae_raw(&rewards, &values, &dones, 0.0, self.config.gamma, self.config.lambda);
        let returns = raw.iter().zip(&values).map(|(a, v)| a + v).collect();
        (normalize(&raw), returns)
    }

    /// Clipped-surrogate update over `epochs` passes of shuffled minibatches.
    pub fn update(&mut self, batch: &[PpoSample], rng: &mut GameRng) -> Result<PpoStats, NetError> {
        if batch.is_empty() {
            return Ok(PpoStats::default());
        }
        let (adv, returns) = self.advantages(batch);
        ppo_update(
            &mut self.actor,
            &mut self.critic,
            &mut self.actor_adam,
            &mut self.critic_adam,
            batch,
            &adv,
            &returns,
            &self.config,
            rng,
        )
    }
}

/// Gradients of the minibatch loss for the actor and critic. Also returns the
/// minibatch means of the surrogate, the value error and the entropy.
#[allow(clippy::too_many_arguments)]
pub fn minibatch_gradients(
    actor: &DenseNet,
    critic: &DenseNet,
    batch: &[PpoSample],
    idx: &[usize],
    advantages: &[f64],
    returns: &[f64],
    cfg: &PpoConfig,
) -> Result<(Gradients, Gradients, PpoStats), NetError> {
    let m = idx.len() as f64;
    let mut ga = Gradients::zeros_like(actor);
    let mut gc = Gradients::zeros_like(critic);
    let mut stats = PpoStats::default();
    for &i in idx {
        let s = &batch[i];
        let trace = actor.forward_trace(&s.state)?;
        let terms = policy_terms(trace.output(), &s.mask, s.action, s.log_prob, advantages[i], cfg.clip, cfg.entropy_coef);
        let g: Vec<f64> = terms.logit_grad.iter().map(|x| x / m).collect();
        actor.backward_into(&trace, &g, &mut ga)?;
        let ct = critic.forward_trace(&s.state)?;
        let err = ct.output()[0] - returns[i];
        critic.backward_into(&ct, &[cfg.value_coef * 2.0 * err / m], &mut gc)?;
        stats.policy_loss -= terms.surrogate / m;
        stats.value_loss += err * err / m;
        stats.entropy += terms.entropy / m;
    }
    Ok((ga, gc, stats))
}

/// Runs the clipped PPO update and returns the loss terms averaged over every minibatch.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update(
    actor: &mut DenseNet,
    critic: &mut DenseNet,
    actor_adam: &mut Adam,
    critic_adam: &mut Adam,
    batch: &[PpoSample],
    advantages: &[f64],
    returns: &[f64],
    cfg: &PpoConfig,
    rng: &mut GameRng,
) -> Result<PpoStats, NetError> {
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut total = PpoStats::default();
    let mut count = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch.max(1)) {
            let (ga, gc, st) = minibatch_gradients(actor, critic, batch, chunk, advantages, returns, cfg)?;
            actor_adam.step(actor, &ga)?;
            critic_adam.step(critic, &gc)?;
            total.policy_loss += st.policy_loss;
            total.value_loss += st.value_loss;
            total.entropy += st.entropy;
            count += 1.0;
        }
    }
    if count > 0.0 {
        total.policy_loss /= count;
        total.value_loss /= count;
        total.entropy /= count;
    }
    Ok(total)
}
