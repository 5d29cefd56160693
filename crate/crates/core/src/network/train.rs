//! Mini-batch SGD with softmax cross-entropy.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{relu, BatchNorm1d};
use super::{Layer, Network};
use crate::linalg::Matrix;
use crate::math::{exp, ln, powi, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Initial learning rate η.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// The learning rate is multiplied by this factor every `decay_every` epochs.
    pub decay_factor: f64,
    pub decay_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            batch_size: 32,
            epochs: 50,
            decay_factor: 0.1,
            decay_every: 25,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor.is_finite()) {
            return Err(Error::Config("decay factor must be positive".into()));
        }
        if self.decay_every == 0 {
            return Err(Error::Config("decay interval must be at least 1 epoch".into()));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * powi(self.decay_factor, (epoch / self.decay_every) as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    /// Mean training loss per epoch.
    pub loss: Vec<f64>,
    /// Evaluation accuracy per epoch, if an evaluation set was given.
    pub accuracy: Vec<f64>,
}

/// Gradient of one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrad {
    None,
    Dense { weights: Matrix, bias: Vec<f64> },
    BatchNorm { gamma: Vec<f64>, beta: Vec<f64> },
}

enum Cache {
    Input(Matrix),
    BatchNorm { x_hat: Matrix, inv_std: Vec<f64>, mean: Vec<f64>, var: Vec<f64> },
}

/// Mean cross-entropy of `logits` against `labels`, computed with log-sum-exp.
pub fn cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(logits, labels)?;
    let mut total = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        total += log_sum_exp(logits.row(r)) - logits.get(r, y);
    }
    Ok(total / labels.len() as f64)
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + ln(z.iter().map(|&v| exp(v - m)).sum::<f64>())
}

fn check_labels(logits: &Matrix, labels: &[usize]) -> Result<()> {
    if logits.rows() != labels.len() || labels.is_empty() {
        return Err(Error::Shape(format!(
            "{} label(s) for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= logits.cols()) {
        return Err(Error::Config(format!("label {bad} out of range for {} classes", logits.cols())));
    }
    Ok(())
}

fn batch_norm_train(bn: &BatchNorm1d, x: &Matrix) -> Result<(Matrix, Cache)> {
    if x.cols() != bn.features() {
        return Err(Error::Shape("batch-norm feature count mismatch".into()));
    }
    let n = x.rows() as f64;
    let f = x.cols();
    let mut mean = vec![0.0; f];
    let mut var = vec![0.0; f];
    for r in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v / n;
        }
    }
    for r in 0..x.rows() {
        for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / sqrt(v + bn.eps)).collect();
    let x_hat = Matrix::from_fn(x.rows(), f, |r, c| (x.get(r, c) - mean[c]) * inv_std[c]);
    let y = Matrix::from_fn(x.rows(), f, |r, c| bn.gamma[c] * x_hat.get(r, c) + bn.beta[c]);
    Ok((y, Cache::BatchNorm { x_hat, inv_std, mean, var }))
}

fn forward_train(net: &Network, x: &Matrix) -> Result<(Matrix, Vec<Cache>)> {
    let mut caches = Vec::with_capacity(net.layers.len());
    let mut a = x.clone();
    for layer in &net.layers {
        let out = match layer {
            Layer::Dense(d) => d.forward(&a)?,
            Layer::Relu => relu(&a),
            Layer::BatchNorm1d(bn) => {
                let (y, cache) = batch_norm_train(bn, &a)?;
                caches.push(cache);
                a = y;
                continue;
            }
            Layer::Conv2d(_) | Layer::Memristive(_) => {
                return Err(Error::Config(
                    "the trainer handles dense, ReLU and batch-norm layers only".into(),
                ))
            }
        };
        caches.push(Cache::Input(a));
        a = out;
    }
    Ok((a, caches))
}

/// Loss and per-layer gradients on one batch, with batch-norm in training
/// mode. Does not modify the network.
pub fn loss_and_gradients(net: &Network, x: &Matrix, labels: &[usize]) -> Result<(f64, Vec<LayerGrad>)> {
    let (logits, caches) = forward_train(net, x)?;
    let loss = cross_entropy(&logits, labels)?;
    let n = labels.len() as f64;
    // d loss / d logits = (softmax − onehot) / n
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    for (r, &y) in labels.iter().enumerate() {
        let lse = log_sum_exp(logits.row(r));
        for (c, g) in grad.row_mut(r).iter_mut().enumerate() {
            *g = exp(logits.get(r, c) - lse) / n;
        }
        *grad.row_mut(r).get_mut(y).expect("checked label") -= 1.0 / n;
    }
    let mut grads = vec![LayerGrad::None; net.layers.len()];
    for (k, (layer, cache)) in net.layers.iter().zip(&caches).enumerate().rev() {
        match (layer, cache) {
            (Layer::Dense(d), Cache::Input(input)) => {
                let weights = grad.transpose().matmul(input)?;
                let mut bias = vec![0.0; d.out_features()];
                for r in 0..grad.rows() {
                    for (b, g) in bias.iter_mut().zip(grad.row(r)) {
                        *b += g;
                    }
                }
                grads[k] = LayerGrad::Dense { weights, bias };
                grad = grad.matmul(&d.weights)?;
            }
            (Layer::Relu, Cache::Input(input)) => {
                for (g, &v) in grad.as_mut_slice().iter_mut().zip(input.as_slice()) {
                    if v <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            (Layer::BatchNorm1d(bn), Cache::BatchNorm { x_hat, inv_std, .. }) => {
                let rows = grad.rows();
                let m = rows as f64;
                let f = grad.cols();
                let mut gamma = vec![0.0; f];
                let mut beta = vec![0.0; f];
                for r in 0..rows {
                    for c in 0..f {
                        gamma[c] += grad.get(r, c) * x_hat.get(r, c);
                        beta[c] += grad.get(r, c);
                    }
                }
                let dx = Matrix::from_fn(rows, f, |r, c| {
                    bn.gamma[c] * inv_std[c] / m
                        * (m * grad.get(r, c) - beta[c] - x_hat.get(r, c) * gamma[c])
                });
                grads[k] = LayerGrad::BatchNorm { gamma, beta };
                grad = dx;
            }
            _ => unreachable!("cache kinds follow layer kinds"),
        }
    }
    Ok((loss, grads))
}

fn sgd_step(net: &mut Network, grads: &[LayerGrad], lr: f64) {
    for (layer, grad) in net.layers.iter_mut().zip(grads) {
        match (layer, grad) {
            (Layer::Dense(d), LayerGrad::Dense { weights, bias }) => {
                for (w, g) in d.weights.as_mut_slice().iter_mut().zip(weights.as_slice()) {
                    *w -= lr * g;
                }
                for (b, g) in d.bias.iter_mut().zip(bias) {
                    *b -= lr * g;
                }
            }
            (Layer::BatchNorm1d(bn), LayerGrad::BatchNorm { gamma, beta }) => {
                for (p, g) in bn.gamma.iter_mut().zip(gamma) {
                    *p -= lr * g;
                }
                for (p, g) in bn.beta.iter_mut().zip(beta) {
                    *p -= lr * g;
                }
            }
            _ => {}
        }
    }
}

fn update_running_stats(net: &mut Network, x: &Matrix) -> Result<()> {
    let (_, caches) = forward_train(net, x)?;
    let n = x.rows() as f64;
    let mut caches = caches.into_iter();
    for layer in &mut net.layers {
        let cache = caches.next().expect("one cache per layer");
        if let (Layer::BatchNorm1d(bn), Cache::BatchNorm { mean, var, .. }) = (layer, cache) {
            let unbias = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
            for c in 0..bn.features() {
                bn.running_mean[c] = (1.0 - bn.momentum) * bn.running_mean[c] + bn.momentum * mean[c];
                bn.running_var[c] =
                    (1.0 - bn.momentum) * bn.running_var[c] + bn.momentum * var[c] * unbias;
            }
        }
    }
    Ok(())
}

/// Fraction of rows whose argmax matches the label.
pub fn accuracy(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(logits, labels)?;
    let hits = logits.argmax_rows().iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Trains `net` in place.
pub fn train_tiny(
    net: &mut Network,
    x: &Matrix,
    labels: &[usize],
    cfg: &TrainConfig,
    eval: Option<(&Matrix, &[usize])>,
) -> Result<TrainHistory> {
    cfg.validate()?;
    if x.rows() != labels.len() || x.rows() == 0 {
        return Err(Error::Shape(format!("{} samples with {} labels", x.rows(), labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut history = TrainHistory::default();
    let has_bn = net.layers.iter().any(|l| matches!(l, Layer::BatchNorm1d(_)));
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let xb = x.select_rows(idx);
            let yb: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = loss_and_gradients(net, &xb, &yb)?;
            if !loss.is_finite() {
                return Err(Error::NanLoss { epoch, batch });
            }
            total += loss * idx.len() as f64;
            if has_bn {
                update_running_stats(net, &xb)?;
            }
            sgd_step(net, &grads, lr);
        }
        history.loss.push(total / x.rows() as f64);
        if let Some((ex, ey)) = eval {
            history.accuracy.push(accuracy(&net.forward(ex)?, ey)?);
        }
    }
    Ok(history)
}
