//! A from-scratch tiny multilayer perceptron: architecture specification,
//! initialization schemes, forward pass, binary cross-entropy, analytic
//! gradients and constant-rate SGD without momentum.
//!
//! Conventions fixed across the crate:
//!
//! * the output layer is always a single sigmoid unit, its value clamped
//!   to `[SIGMOID_CLAMP, 1 - SIGMOID_CLAMP]` so every loss is finite;
//! * biases initialize to zero under every scheme;
//! * the ReLU subgradient at exactly zero is zero;
//! * flattened parameter order is layer-major, weights before bias,
//!   weight matrices row-major (row = output neuron). [`gradient`] and
//!   [`WeightSet::flatten`] share this order.

use crate::data::EncodedSample;
use crate::error::{domain, Error, Result};
use crate::rng::Rng;

/// Sigmoid outputs are clamped to `[eps, 1 - eps]` with this epsilon.
pub const SIGMOID_CLAMP: f64 = 1e-7;

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed in terms of the pre-activation `z`.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            // subgradient at 0 is 0 (ties break toward the dead branch)
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

/// Weight initialization recipe.
///
/// The fan-scaled schemes follow the usual definitions: `HeNormal` draws
/// from Normal(0, sqrt(2/fan_in)), `HeUniform` from
/// Uniform(+/- sqrt(6/fan_in)), `XavierNormal` from
/// Normal(0, sqrt(2/(fan_in+fan_out))). The plain schemes use the given
/// scale as the normal's standard deviation or the uniform's half-range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    HeNormal,
    HeUniform,
    XavierNormal,
    PlainNormal { scale: f64 },
    PlainUniform { scale: f64 },
}

impl std::fmt::Display for InitScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitScheme::HeNormal => write!(f, "he_normal"),
            InitScheme::HeUniform => write!(f, "he_uniform"),
            InitScheme::XavierNormal => write!(f, "xavier_normal"),
            InitScheme::PlainNormal { scale } => write!(f, "plain_normal({scale})"),
            InitScheme::PlainUniform { scale } => write!(f, "plain_uniform({scale})"),
        }
    }
}

/// Architecture plus initialization recipe for a tiny MLP with a single
/// sigmoid output unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_width: usize,
    /// Number of hidden layers; 0 means logistic regression.
    pub hidden_depth: usize,
    pub activation: Activation,
    pub init: InitScheme,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(domain("input_dim must be >= 1"));
        }
        if self.hidden_depth > 0 && self.hidden_width == 0 {
            return Err(domain("hidden_width must be >= 1 when hidden_depth > 0"));
        }
        if let InitScheme::PlainNormal { scale } | InitScheme::PlainUniform { scale } = self.init {
            if !scale.is_finite() || scale <= 0.0 {
                return Err(domain(format!("init scale must be positive, got {scale}")));
            }
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` per layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        if self.hidden_depth == 0 {
            return vec![(self.input_dim, 1)];
        }
        let mut dims = vec![(self.input_dim, self.hidden_width)];
        for _ in 1..self.hidden_depth {
            dims.push((self.hidden_width, self.hidden_width));
        }
        dims.push((self.hidden_width, 1));
        dims
    }
}

/// Exact parameter count including biases.
pub fn param_count(spec: &NetworkSpec) -> usize {
    spec.layer_dims().iter().map(|&(fi, fo)| fi * fo + fo).sum()
}

/// One dense layer: `weights` is fan_out x fan_in row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Concrete layer weights and biases: one sampled point in weight space.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub layers: Vec<Layer>,
}

impl WeightSet {
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.fan_in)
    }

    /// Flat parameter vector in the crate's canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Add `delta` to the parameter at `flat_index` (canonical order).
    pub fn nudge(&self, flat_index: usize, delta: f64) -> WeightSet {
        let mut w = self.clone();
        let mut idx = flat_index;
        for layer in &mut w.layers {
            if idx < layer.weights.len() {
                layer.weights[idx] += delta;
                return w;
            }
            idx -= layer.weights.len();
            if idx < layer.bias.len() {
                layer.bias[idx] += delta;
                return w;
            }
            idx -= layer.bias.len();
        }
        panic!("flat index {flat_index} out of range");
    }

    /// In-place SGD step `w -= lr * grad` (canonical order).
    pub fn sgd_step(&mut self, grad: &[f64], lr: f64) {
        let mut idx = 0;
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w -= lr * grad[idx];
                idx += 1;
            }
            for b in &mut layer.bias {
                *b -= lr * grad[idx];
                idx += 1;
            }
        }
        debug_assert_eq!(idx, grad.len());
    }
}

/// Draw a fresh weight set for `spec`. Bit-identical for identical
/// `(spec, trial_seed)`; draw order is the canonical flat order.
pub fn init_weights(spec: &NetworkSpec, trial_seed: u64) -> Result<WeightSet> {
    spec.validate()?;
    let mut rng = Rng::new(trial_seed);
    let layers = spec
        .layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let mut draw: Box<dyn FnMut(&mut Rng) -> f64> = match spec.init {
                InitScheme::HeNormal => {
                    let std = (2.0 / fan_in as f64).sqrt();
                    Box::new(move |r| std * r.normal())
                }
                InitScheme::HeUniform => {
                    let a = (6.0 / fan_in as f64).sqrt();
                    Box::new(move |r| r.uniform_in(-a, a))
                }
                InitScheme::XavierNormal => {
                    let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
                    Box::new(move |r| std * r.normal())
                }
                InitScheme::PlainNormal { scale } => Box::new(move |r| scale * r.normal()),
                InitScheme::PlainUniform { scale } => Box::new(move |r| r.uniform_in(-scale, scale)),
            };
            let weights = (0..fan_in * fan_out).map(|_| draw(&mut rng)).collect();
            Layer { fan_in, fan_out, weights, bias: vec![0.0; fan_out] }
        })
        .collect();
    Ok(WeightSet { layers })
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP)
}

fn affine(layer: &Layer, input: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for o in 0..layer.fan_out {
        let row = &layer.weights[o * layer.fan_in..(o + 1) * layer.fan_in];
        let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + layer.bias[o];
        out.push(z);
    }
}

/// Output probability of the network on `features`, clamped away from 0
/// and 1.
pub fn forward(weights: &WeightSet, features: &[f64], activation: Activation) -> Result<f64> {
    if features.len() != weights.input_dim() {
        return Err(domain(format!(
            "feature length {} does not match input dim {}",
            features.len(),
            weights.input_dim()
        )));
    }
    let mut current = features.to_vec();
    let mut next = Vec::new();
    let last = weights.layers.len() - 1;
    for (i, layer) in weights.layers.iter().enumerate() {
        affine(layer, &current, &mut next);
        if i < last {
            for z in next.iter_mut() {
                *z = activation.apply(*z);
            }
        }
        std::mem::swap(&mut current, &mut next);
    }
    Ok(clamp_prob(sigmoid(current[0])))
}

/// Binary cross-entropy of a clamped probability against a binary label.
pub fn bce_loss(prob: f64, label: bool) -> f64 {
    let y = if label { 1.0 } else { 0.0 };
    -(y * prob.ln() + (1.0 - y) * (1.0 - prob).ln())
}

/// Mean binary cross-entropy of the network over `samples`.
pub fn mean_loss(
    weights: &WeightSet,
    samples: &[EncodedSample],
    activation: Activation,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(domain("mean_loss needs a non-empty sample list"));
    }
    let mut total = 0.0;
    for s in samples {
        total += bce_loss(forward(weights, &s.features, activation)?, s.label);
    }
    Ok(total / samples.len() as f64)
}

/// Exact analytic gradient of [`mean_loss`] over `batch`, flattened in the
/// canonical order (layer-major, weights then bias, row-major).
///
/// Where the sigmoid output sits inside the clamp region its derivative is
/// zero, matching what finite differences of the clamped loss see.
pub fn gradient(
    weights: &WeightSet,
    batch: &[EncodedSample],
    activation: Activation,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(domain("gradient needs a non-empty batch"));
    }
    let n_layers = weights.layers.len();
    let mut grad = vec![0.0; weights.param_count()];
    // flat offset of each layer's block
    let mut offsets = Vec::with_capacity(n_layers);
    let mut off = 0;
    for layer in &weights.layers {
        offsets.push(off);
        off += layer.weights.len() + layer.bias.len();
    }

    let mut pre: Vec<Vec<f64>> = vec![Vec::new(); n_layers];
    let mut post: Vec<Vec<f64>> = vec![Vec::new(); n_layers];
    for sample in batch {
        if sample.features.len() != weights.input_dim() {
            return Err(domain(format!(
                "feature length {} does not match input dim {}",
                sample.features.len(),
                weights.input_dim()
            )));
        }
        // forward, retaining pre- and post-activations
        let mut current: &[f64] = &sample.features;
        for (i, layer) in weights.layers.iter().enumerate() {
            let mut z = Vec::new();
            affine(layer, current, &mut z);
            let a = if i < n_layers - 1 {
                z.iter().map(|&v| activation.apply(v)).collect()
            } else {
                z.clone()
            };
            pre[i] = z;
            post[i] = a;
            current = &post[i];
        }

        // output delta: p - y, or 0 inside the clamp region
        let p_raw = sigmoid(pre[n_layers - 1][0]);
        let y = sample.label_f64();
        let out_delta = if (SIGMOID_CLAMP..=1.0 - SIGMOID_CLAMP).contains(&p_raw) {
            p_raw - y
        } else {
            0.0
        };

        let mut delta = vec![out_delta];
        for i in (0..n_layers).rev() {
            let layer = &weights.layers[i];
            let below: &[f64] = if i == 0 { &sample.features } else { &post[i - 1] };
            let base = offsets[i];
            for o in 0..layer.fan_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = base + o * layer.fan_in;
                    for (j, &x) in below.iter().enumerate() {
                        grad[row + j] += d * x;
                    }
                }
                grad[base + layer.fan_out * layer.fan_in + o] += d;
            }
            if i > 0 {
                // delta_{i-1} = (W_i^T delta_i) .* act'(z_{i-1})
                let mut next_delta = vec![0.0; layer.fan_in];
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        let row = &layer.weights[o * layer.fan_in..(o + 1) * layer.fan_in];
                        for (j, &w) in row.iter().enumerate() {
                            next_delta[j] += w * d;
                        }
                    }
                }
                for (j, nd) in next_delta.iter_mut().enumerate() {
                    *nd *= activation.derivative(pre[i - 1][j]);
                }
                delta = next_delta;
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    for g in &mut grad {
        *g *= inv;
    }
    Ok(grad)
}

/// Per-epoch losses, weight snapshots and the run's configuration echo.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    /// Mean full-data loss after each epoch (`epoch_losses[e]` is the loss
    /// after epoch `e + 1`).
    pub epoch_losses: Vec<f64>,
    /// `(epoch index, weights)`, strictly increasing epochs; index 0 is
    /// the initialization, later entries land on the snapshot cadence and
    /// the final epoch.
    pub snapshots: Vec<(usize, WeightSet)>,
    pub best_loss: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub activation: Activation,
}

/// Plain constant-rate SGD without momentum.
///
/// Batches are reshuffled every epoch from the stream `(seed, epoch)`;
/// a trailing partial batch is kept. The run aborts with
/// [`Error::Diverged`] if the full-data loss ever turns non-finite.
#[allow(clippy::too_many_arguments)]
pub fn train(
    spec: &NetworkSpec,
    data: &[EncodedSample],
    lr: f64,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    snapshot_every: usize,
) -> Result<TrainRun> {
    spec.validate()?;
    if data.is_empty() {
        return Err(domain("train needs a non-empty dataset"));
    }
    if batch_size == 0 || batch_size > data.len() {
        return Err(domain(format!(
            "batch_size must be in 1..={}, got {batch_size}",
            data.len()
        )));
    }
    if epochs == 0 {
        return Err(domain("epochs must be >= 1"));
    }
    if snapshot_every == 0 {
        return Err(domain("snapshot_every must be >= 1"));
    }
    if !lr.is_finite() || lr < 0.0 {
        return Err(domain(format!("learning rate must be finite and >= 0, got {lr}")));
    }

    let mut weights = init_weights(spec, seed)?;
    let mut snapshots = vec![(0usize, weights.clone())];
    let mut epoch_losses = Vec::with_capacity(epochs);
    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut batch: Vec<EncodedSample> = Vec::with_capacity(batch_size);

    for epoch in 1..=epochs {
        let mut rng = Rng::from_indexed(seed, epoch as u64);
        rng.shuffle(&mut indices);
        for chunk in indices.chunks(batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let grad = gradient(&weights, &batch, spec.activation)?;
            weights.sgd_step(&grad, lr);
        }
        let loss = mean_loss(&weights, data, spec.activation)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, losses_so_far: epoch_losses });
        }
        epoch_losses.push(loss);
        if epoch % snapshot_every == 0 || epoch == epochs {
            snapshots.push((epoch, weights.clone()));
        }
    }

    let best_loss = epoch_losses.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TrainRun {
        epoch_losses,
        snapshots,
        best_loss,
        lr,
        batch_size,
        seed,
        activation: spec.activation,
    })
}
