//! Small dense networks in f64 with exact backpropagation, Adam and JSON checkpoints.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::GameRng;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("checkpoint parse error: {0}")]
    Parse(String),
    #[error("checkpoint io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

/// Applies `act` in place.
pub fn activate(act: Activation, z: &mut [f64]) {
    match act {
        Activation::Relu => z.iter_mut().for_each(|x| *x = x.max(0.0)),
        Activation::Linear => {}
        Activation::Softmax => softmax_in_place(z),
    }
}

/// Softmax with max subtraction.
pub fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in z.iter_mut() {
        *x = (*x - m).exp();
        sum += *x;
    }
    z.iter_mut().for_each(|x| *x /= sum);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim × in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn affine(&self, x: &[f64], z: &mut Vec<f64>) {
        z.clear();
        z.extend_from_slice(&self.bias);
        for (o, zo) in z.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            *zo += row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<Layer>,
}

/// Intermediate values of one forward pass, needed by [`DenseNet::backward`].
#[derive(Debug, Clone)]
pub struct Trace {
    /// `activations[0]` is the input, `activations[k + 1]` the output of layer `k`.
    pub activations: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has the input at least")
    }
}

/// Gradients with the same shapes as a network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Gradients {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.weights.iter_mut().chain(self.bias.iter_mut()).for_each(|v| v.iter_mut().for_each(|x| *x *= k));
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().chain(&self.bias).flatten().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl DenseNet {
    /// Glorot-uniform weights, zero biases. `dims` lists every layer width
    /// including the input, so `activations.len() == dims.len() - 1`.
    pub fn new(dims: &[usize], activations: &[Activation], rng: &mut GameRng) -> Result<DenseNet, NetError> {
        let mut net = DenseNet::zeros(dims, activations)?;
        for l in &mut net.layers {
            let bound = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
            l.weights.iter_mut().for_each(|w| *w = rng.random_range(-bound..bound));
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize], activations: &[Activation]) -> Result<DenseNet, NetError> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(NetError::Architecture(format!(
                "{} widths need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        if dims.contains(&0) {
            return Err(NetError::Architecture("layer widths must be positive".into()));
        }
        if activations[..activations.len() - 1].contains(&Activation::Softmax) {
            return Err(NetError::Architecture("softmax is only allowed on the last layer".into()));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| Layer {
                in_dim: w[0],
                out_dim: w[1],
                weights: vec![0.0; w[0] * w[1]],
                bias: vec![0.0; w[1]],
                activation,
            })
            .collect();
        Ok(DenseNet { layers })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].in_dim];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|x| x.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NetError> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut z = Vec::new();
        for l in &self.layers {
            l.affine(&x, &mut z);
            activate(l.activation, &mut z);
            std::mem::swap(&mut x, &mut z);
        }
        Ok(x)
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<Trace, NetError> {
        self.check_input(input)?;
        let mut activations = vec![input.to_vec()];
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let mut z = Vec::with_capacity(l.out_dim);
            l.affine(activations.last().expect("non-empty"), &mut z);
            let mut a = z.clone();
            activate(l.activation, &mut a);
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(Trace { activations, pre_activations })
    }

    /// Backpropagates `output_grad` (the loss gradient with respect to the network
    /// output) and accumulates parameter gradients into `grads`. Returns the
    /// gradient with respect to the input.
    pub fn backward_into(
        &self,
        trace: &Trace,
        output_grad: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>, NetError> {
        if output_grad.len() != self.output_dim() {
            return Err(NetError::Shape { expected: self.output_dim(), actual: output_grad.len() });
        }
        if trace.activations.len() != self.layers.len() + 1 {
            return Err(NetError::Shape {
                expected: self.layers.len() + 1,
                actual: trace.activations.len(),
            });
        }
        let mut g = output_grad.to_vec();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let z = &trace.pre_activations[k];
            let a = &trace.activations[k + 1];
            match l.activation {
                Activation::Relu => g.iter_mut().zip(z).for_each(|(gi, &zi)| {
                    if zi <= 0.0 {
                        *gi = 0.0
                    }
                }),
                Activation::Linear => {}
                Activation::Softmax => {
                    let dot: f64 = g.iter().zip(a).map(|(gi, ai)| gi * ai).sum();
                    g.iter_mut().zip(a).for_each(|(gi, &ai)| *gi = ai * (*gi - dot));
                }
            }
            let x = &trace.activations[k];
            let gw = &mut grads.weights[k];
            for o in 0..l.out_dim {
                let go = g[o];
                if go == 0.0 {
                    continue;
                }
                let row = &mut gw[o * l.in_dim..(o + 1) * l.in_dim];
                row.iter_mut().zip(x).for_each(|(w, xi)| *w += go * xi);
            }
            grads.bias[k].iter_mut().zip(&g).for_each(|(b, gi)| *b += gi);
            let mut gx = vec![0.0; l.in_dim];
            for o in 0..l.out_dim {
                let go = g[o];
                if go == 0.0 {
                    continue;
                }
                let row = &l.weights[o * l.in_dim..(o + 1) * l.in_dim];
                gx.iter_mut().zip(row).for_each(|(gi, w)| *gi += go * w);
            }
            g = gx;
        }
        Ok(g)
    }

    pub fn backward(&self, trace: &Trace, output_grad: &[f64]) -> Result<Gradients, NetError> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(trace, output_grad, &mut grads)?;
        Ok(grads)
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NetError> {
        if input.len() != self.input_dim() {
            return Err(NetError::Shape { expected: self.input_dim(), actual: input.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m_weights: Vec<Vec<f64>>,
    pub m_bias: Vec<Vec<f64>>,
    pub v_weights: Vec<Vec<f64>>,
    pub v_bias: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &DenseNet, lr: f64) -> Adam {
        let z = Gradients::zeros_like(net);
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m_weights: z.weights.clone(),
            m_bias: z.bias.clone(),
            v_weights: z.weights,
            v_bias: z.bias,
        }
    }

    /// One bias-corrected Adam update, descending along `grads`.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<(), NetError> {
        if grads.weights.len() != net.layers.len() || self.m_weights.len() != net.layers.len() {
            return Err(NetError::Shape { expected: net.layers.len(), actual: grads.weights.len() });
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, l) in net.layers.iter_mut().enumerate() {
            if grads.weights[k].len() != l.weights.len() || grads.bias[k].len() != l.bias.len() {
                return Err(NetError::Shape { expected: l.weights.len(), actual: grads.weights[k].len() });
            }
            let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
            let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
                for i in 0..p.len() {
                    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                    let mh = m[i] / c1;
                    let vh = v[i] / c2;
                    p[i] -= lr * mh / (vh.sqrt() + eps);
                }
            };
            update(&mut l.weights, &grads.weights[k], &mut self.m_weights[k], &mut self.v_weights[k]);
            update(&mut l.bias, &grads.bias[k], &mut self.m_bias[k], &mut self.v_bias[k]);
        }
        Ok(())
    }
}

/// On-disk form of one network (and optionally its optimizer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<Adam>,
}

impl NetCheckpoint {
    pub fn from_net(net: &DenseNet, optimizer: Option<&Adam>) -> NetCheckpoint {
        NetCheckpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            layer_dims: net.dims(),
            activations: net.activations(),
            weights: net.layers.iter().map(|l| l.weights.clone()).collect(),
            biases: net.layers.iter().map(|l| l.bias.clone()).collect(),
            optimizer: optimizer.cloned(),
        }
    }

    pub fn to_net(&self) -> Result<DenseNet, NetError> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(NetError::Parse(format!("unsupported format_version {}", self.format_version)));
        }
        let mut net = DenseNet::zeros(&self.layer_dims, &self.activations)?;
        if self.weights.len() != net.layers.len() || self.biases.len() != net.layers.len() {
            return Err(NetError::Parse("weight and bias arrays do not match layer_dims".into()));
        }
        for (k, l) in net.layers.iter_mut().enumerate() {
            if self.weights[k].len() != l.weights.len() || self.biases[k].len() != l.bias.len() {
                return Err(NetError::Parse(format!("layer {k} has the wrong number of parameters")));
            }
            l.weights.copy_from_slice(&self.weights[k]);
            l.bias.copy_from_slice(&self.biases[k]);
        }
        if !net.is_finite() {
            return Err(NetError::Parse("non-finite parameter".into()));
        }
        Ok(net)
    }
}

pub fn save_weights(net: &DenseNet, optimizer: Option<&Adam>, path: &Path) -> Result<(), NetError> {
    let text = serde_json::to_string(&NetCheckpoint::from_net(net, optimizer))
        .map_err(|e| NetError::Parse(e.to_string()))?;
    fs::write(path, text).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))
}

pub fn load_weights(path: &Path) -> Result<(DenseNet, Option<Adam>), NetError> {
    let text = fs::read_to_string(path).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))?;
    let ckpt: NetCheckpoint = serde_json::from_str(&text).map_err(|e| NetError::Parse(e.to_string()))?;
    Ok((ckpt.to_net()?, ckpt.optimizer))
}
