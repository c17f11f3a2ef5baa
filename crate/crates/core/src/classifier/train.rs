use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{log_sum_exp, softmax_in_place, Architecture, ClassifierHead};
use crate::data::FeaturePool;
use crate::error::{Error, Result};
use crate::seed;

/// Mini-batch steepest descent settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay_per_epoch: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 60,
            batch_size: 64,
            weight_decay: 1e-5,
            lr_decay_per_epoch: 0.995,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            errors.push(format!("train.learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 {
            errors.push("train.epochs must be positive".into());
        }
        if self.batch_size == 0 {
            errors.push("train.batch_size must be positive".into());
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            errors.push(format!("train.weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if !(self.lr_decay_per_epoch > 0.0 && self.lr_decay_per_epoch <= 1.0) {
            errors.push(format!(
                "train.lr_decay_per_epoch must be in (0, 1], got {}",
                self.lr_decay_per_epoch
            ));
        }
        errors
    }
}

/// Cold-start training on the labeled part of `pool`.
pub fn train(pool: &FeaturePool, arch: &Architecture, config: &TrainConfig) -> Result<ClassifierHead> {
    fit(&pool.labeled_examples(), pool.dim(), pool.num_classes(), arch, config)
}

struct Gradients {
    hidden_w: Vec<f64>,
    hidden_b: Vec<f64>,
    output_w: Vec<f64>,
    output_b: Vec<f64>,
}

impl Gradients {
    fn zeroed(head: &ClassifierHead) -> Self {
        let (hw, hb) = head
            .hidden()
            .map_or((0, 0), |h| (h.weights().len(), h.bias().len()));
        Self {
            hidden_w: vec![0.0; hw],
            hidden_b: vec![0.0; hb],
            output_w: vec![0.0; head.output().weights().len()],
            output_b: vec![0.0; head.num_classes()],
        }
    }

    fn clear(&mut self) {
        for g in [&mut self.hidden_w, &mut self.hidden_b, &mut self.output_w, &mut self.output_b] {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

fn descend(params: &mut [f64], grads: &[f64], scale: f64, lr: f64, weight_decay: f64) {
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * (g * scale + weight_decay * *p);
    }
}

/// Minimizes mean cross-entropy over `examples` from a fresh initialization.
pub fn fit(
    examples: &[(&[f64], usize)],
    input_dim: usize,
    num_classes: usize,
    arch: &Architecture,
    config: &TrainConfig,
) -> Result<ClassifierHead> {
    if examples.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    for &(x, y) in examples {
        if x.len() != input_dim {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                got: x.len(),
            });
        }
        if y >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                num_classes,
            });
        }
    }

    let mut head = ClassifierHead::initialize(
        input_dim,
        num_classes,
        arch,
        seed::derive(config.rng_seed, &[0]),
    );
    let mut rng = seed::rng(config.rng_seed, &[1]);
    let width = head.penultimate_dim();
    let keep = 1.0 - head.dropout_rate();
    let mut grads = Gradients::zeroed(&head);
    let mut order: Vec<usize> = (0..examples.len()).collect();

    let mut pre = vec![0.0; width];
    let mut pen = vec![0.0; width];
    let mut z = vec![0.0; num_classes];
    let mut back = vec![0.0; width];

    let mut lr = config.learning_rate;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            grads.clear();
            let mut loss = 0.0;
            for &i in batch {
                let (x, y) = examples[i];
                match head.hidden() {
                    Some(h) => {
                        h.forward_into(x, &mut pre);
                        for (p, &a) in pen.iter_mut().zip(&pre) {
                            *p = a.max(0.0);
                        }
                    }
                    None => pen.copy_from_slice(x),
                }
                // inverted dropout; a zero entry in `pen` marks a dropped or inactive unit
                for p in pen.iter_mut() {
                    *p = if rng.random::<f64>() < head.dropout_rate() { 0.0 } else { *p / keep };
                }
                head.output().forward_into(&pen, &mut z);
                loss += log_sum_exp(&z) - z[y];
                softmax_in_place(&mut z);
                z[y] -= 1.0;

                for (o, &d) in z.iter().enumerate() {
                    grads.output_b[o] += d;
                    for (g, &p) in grads.output_w[o * width..(o + 1) * width].iter_mut().zip(&pen) {
                        *g += d * p;
                    }
                }
                if head.hidden().is_some() {
                    let out = head.output();
                    for (j, b) in back.iter_mut().enumerate() {
                        *b = if pen[j] > 0.0 {
                            (0..num_classes).map(|o| out.row(o)[j] * z[o]).sum::<f64>() / keep
                        } else {
                            0.0
                        };
                    }
                    for (j, &b) in back.iter().enumerate() {
                        if b != 0.0 {
                            grads.hidden_b[j] += b;
                            let row = &mut grads.hidden_w[j * input_dim..(j + 1) * input_dim];
                            for (g, &xv) in row.iter_mut().zip(x) {
                                *g += b * xv;
                            }
                        }
                    }
                }
            }
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: batch_no });
            }
            let scale = 1.0 / batch.len() as f64;
            let wd = config.weight_decay;
            {
                let out = head.output_mut();
                descend(out.weights_mut(), &grads.output_w, scale, lr, wd);
                descend(out.bias_mut(), &grads.output_b, scale, lr, wd);
            }
            if let Some(h) = head.hidden_mut() {
                descend(h.weights_mut(), &grads.hidden_w, scale, lr, wd);
                descend(h.bias_mut(), &grads.hidden_b, scale, lr, wd);
            }
        }
        lr *= config.lr_decay_per_epoch;
    }

    let params_finite = head
        .output()
        .weights()
        .iter()
        .chain(head.output().bias())
        .all(|v| v.is_finite());
    if !params_finite {
        return Err(Error::NonFiniteLoss {
            epoch: config.epochs,
            batch: 0,
        });
    }
    Ok(head)
}
