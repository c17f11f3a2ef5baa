//! The trainable classifier: an optional rectifier hidden layer, inverted
//! dropout on the inputs of the output layer, and a softmax output layer.
//!
//! Only the output layer changes during information-gain scoring. The hidden
//! layer is shared behind an [`Arc`] so stepped clones stay cheap.

mod checkpoint;
mod train;

use std::sync::Arc;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use train::{fit, train, TrainConfig};

/// Hidden width and dropout rate of a [`ClassifierHead`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Architecture {
    /// Width of the rectifier hidden layer; 0 gives a purely linear head.
    pub hidden_units: usize,
    pub dropout_rate: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden_units: 64,
            dropout_rate: 0.2,
        }
    }
}

impl Architecture {
    pub fn linear(dropout_rate: f64) -> Self {
        Self {
            hidden_units: 0,
            dropout_rate,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !(0.0..1.0).contains(&self.dropout_rate) {
            errors.push(format!(
                "model.dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        errors
    }
}

/// Fully connected layer. Weights are stored output-major: row `o` holds the
/// `inputs` weights feeding output `o`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform in ±√(6 / (fan_in + fan_out)), zero bias.
    pub fn glorot_uniform(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| dist.sample(rng)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    pub fn from_parts(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != inputs * outputs {
            return Err(Error::DimensionMismatch {
                expected: inputs * outputs,
                got: weights.len(),
            });
        }
        if bias.len() != outputs {
            return Err(Error::DimensionMismatch {
                expected: outputs,
                got: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|w| !w.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn row(&self, output: usize) -> &[f64] {
        &self.weights[output * self.inputs..(output + 1) * self.inputs]
    }

    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inputs);
        for (o, y) in out.iter_mut().enumerate() {
            *y = self.bias[o] + dot(self.row(o), x);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Overwrites logits with their softmax.
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut p = z.to_vec();
    softmax_in_place(&mut p);
    p
}

/// Entropy in nats of the softmax of `z`, computed from the logits.
pub(crate) fn softmax_entropy(z: &[f64]) -> f64 {
    let lse = log_sum_exp(z);
    -z.iter()
        .map(|&v| {
            let log_p = v - lse;
            log_p.exp() * log_p
        })
        .sum::<f64>()
}

/// The classifier parameters θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    input_dim: usize,
    hidden: Option<Arc<DenseLayer>>,
    output: DenseLayer,
    dropout_rate: f64,
}

impl ClassifierHead {
    /// Output layer zeros; hidden layer Glorot-uniform from `rng_seed`.
    pub fn initialize(input_dim: usize, num_classes: usize, arch: &Architecture, rng_seed: u64) -> Self {
        let mut rng = seed::rng(rng_seed, &[]);
        let hidden = (arch.hidden_units > 0)
            .then(|| Arc::new(DenseLayer::glorot_uniform(input_dim, arch.hidden_units, &mut rng)));
        let penultimate = if arch.hidden_units > 0 { arch.hidden_units } else { input_dim };
        Self {
            input_dim,
            hidden,
            output: DenseLayer::zeros(penultimate, num_classes),
            dropout_rate: arch.dropout_rate,
        }
    }

    pub fn from_layers(hidden: Option<DenseLayer>, output: DenseLayer, dropout_rate: f64) -> Result<Self> {
        let input_dim = hidden.as_ref().map_or(output.inputs, |h| h.inputs);
        if let Some(h) = &hidden {
            if h.outputs != output.inputs {
                return Err(Error::DimensionMismatch {
                    expected: h.outputs,
                    got: output.inputs,
                });
            }
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::Checkpoint(format!("dropout rate {dropout_rate} outside [0, 1)")));
        }
        Ok(Self {
            input_dim,
            hidden: hidden.map(Arc::new),
            output,
            dropout_rate,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.output.outputs
    }

    pub fn penultimate_dim(&self) -> usize {
        self.output.inputs
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn hidden(&self) -> Option<&DenseLayer> {
        self.hidden.as_deref()
    }

    pub fn output(&self) -> &DenseLayer {
        &self.output
    }

    pub(crate) fn output_mut(&mut self) -> &mut DenseLayer {
        &mut self.output
    }

    pub(crate) fn hidden_mut(&mut self) -> Option<&mut DenseLayer> {
        self.hidden.as_mut().map(Arc::make_mut)
    }

    pub fn with_output(&self, output: DenseLayer) -> Self {
        Self {
            input_dim: self.input_dim,
            hidden: self.hidden.clone(),
            output,
            dropout_rate: self.dropout_rate,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Hidden-layer activations, or the raw features for a linear head.
    pub fn penultimate_features(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(match &self.hidden {
            Some(h) => {
                let mut a = vec![0.0; h.outputs];
                h.forward_into(x, &mut a);
                a.iter_mut().for_each(|v| *v = v.max(0.0));
                a
            }
            None => x.to_vec(),
        })
    }

    pub fn logits_from_penultimate(&self, penultimate: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.num_classes()];
        self.output.forward_into(penultimate, &mut z);
        z
    }

    /// Output logits with a fresh inverted-dropout mask on the penultimate units.
    pub fn dropout_logits_from_penultimate(&self, penultimate: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let keep = 1.0 - self.dropout_rate;
        let dropped: Vec<f64> = penultimate
            .iter()
            .map(|&v| if rng.random::<f64>() < self.dropout_rate { 0.0 } else { v / keep })
            .collect();
        self.logits_from_penultimate(&dropped)
    }

    /// Class probabilities. With `dropout_active`, each output-layer input is
    /// zeroed with probability `dropout_rate` and survivors are scaled by
    /// `1 / (1 - dropout_rate)`.
    pub fn predict_proba(
        &self,
        x: &[f64],
        dropout_active: bool,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<Vec<f64>> {
        let h = self.penultimate_features(x)?;
        let mut z = if dropout_active {
            let rng = rng.ok_or(Error::MissingRng)?;
            self.dropout_logits_from_penultimate(&h, rng)
        } else {
            self.logits_from_penultimate(&h)
        };
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Deterministic class probabilities.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict_proba(x, false, None)
    }

    /// Cross-entropy of `(x, label)` under the deterministic forward.
    pub fn cross_entropy(&self, x: &[f64], label: usize) -> Result<f64> {
        let z = self.logits_from_penultimate(&self.penultimate_features(x)?);
        Ok(log_sum_exp(&z) - z[label])
    }

    /// Gradient of the cross-entropy with respect to the output layer at a
    /// given penultimate activation, as (weights in storage order, bias).
    pub fn output_gradient(&self, penultimate: &[f64], label: usize) -> (Vec<f64>, Vec<f64>) {
        let mut delta = self.logits_from_penultimate(penultimate);
        softmax_in_place(&mut delta);
        delta[label] -= 1.0;
        let grad_w = delta
            .iter()
            .flat_map(|&d| penultimate.iter().map(move |&h| d * h))
            .collect();
        (grad_w, delta)
    }

    /// One steepest-descent step on the output layer, from a precomputed
    /// penultimate activation.
    pub fn stepped_output(&self, penultimate: &[f64], label: usize, step_size: f64) -> Result<DenseLayer> {
        let mut delta = self.logits_from_penultimate(penultimate);
        softmax_in_place(&mut delta);
        delta[label] -= 1.0;
        if delta.iter().chain(penultimate).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        let mut out = self.output.clone();
        let width = out.inputs;
        for (o, &d) in delta.iter().enumerate() {
            let scale = step_size * d;
            for (w, &h) in out.weights[o * width..(o + 1) * width].iter_mut().zip(penultimate) {
                *w -= scale * h;
            }
            out.bias[o] -= scale;
        }
        Ok(out)
    }

    /// A copy of this head whose output layer took one steepest-descent step
    /// on the cross-entropy of `(x, assumed_label)`. The hidden layer is shared
    /// unchanged and `self` is not modified.
    pub fn gradient_step_on_head(&self, x: &[f64], assumed_label: usize, step_size: f64) -> Result<Self> {
        if assumed_label >= self.num_classes() {
            return Err(Error::LabelOutOfRange {
                label: assumed_label,
                num_classes: self.num_classes(),
            });
        }
        let h = self.penultimate_features(x)?;
        Ok(self.with_output(self.stepped_output(&h, assumed_label, step_size)?))
    }
}
