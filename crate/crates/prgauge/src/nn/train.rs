//! Mini-batch training with backpropagation.
//!
//! Loss is cross-entropy on the softmax output; the softmax/cross-entropy
//! pair is fused in the backward pass (`∂L/∂logits = p − onehot(y)`), so the
//! final layer must be [`Layer::Softmax`]. Training is sequential and fully
//! determined by the config seed: label noise, epoch shuffles, and
//! augmentation draws all come from one derived stream. Parallelism belongs
//! one level up, across models of a corpus.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data::{augment, AugmentRegime, Dataset};
use crate::error::{Error, Result};
use crate::nn::{Layer, LayerParams, Network};
use crate::rng::{self, TAG_MEASURE, TAG_TRAIN};
use crate::shape::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Fraction of training points whose label is replaced by a uniformly
    /// drawn different label before training; widens the corpus gap spread.
    pub label_noise_fraction: f64,
    pub weight_decay: f64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.label_noise_fraction) {
            return Err(Error::invalid("label noise fraction must lie in [0, 1]"));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::invalid("weight decay must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLog {
    /// Mean cross-entropy per epoch, in training order.
    pub epoch_losses: Vec<f64>,
    /// Accuracy on the training set as trained (noisy labels, own-regime
    /// augmentation when one was used).
    pub final_train_accuracy: f64,
    /// How many labels the noise knob actually replaced.
    pub relabeled: usize,
}

/// Trains a copy of `net` on `data`. The input network is untouched.
pub fn train(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<(Network, TrainLog)> {
    train_with(net, data, cfg, None)
}

/// [`train`] with an optional per-batch augmentation regime.
pub fn train_with(
    net: &Network,
    data: &Dataset,
    cfg: &TrainConfig,
    regime: Option<&AugmentRegime>,
) -> Result<(Network, TrainLog)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if !matches!(net.layers().last(), Some(Layer::Softmax)) {
        return Err(Error::invalid("training requires a softmax output layer"));
    }

    let mut stream = rng::stream(cfg.seed, &[TAG_TRAIN]);
    let (labels, relabeled) = apply_label_noise(
        &data.labels,
        data.num_classes,
        cfg.label_noise_fraction,
        &mut stream,
    );

    let mut trained = net.clone();
    let mut opt = OptimizerState::new(cfg, net.params());
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        crate::data::shuffle(&mut order, &mut stream);
        let mut epoch_loss = 0.0;
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut xs: Vec<Vec<f64>> = chunk.iter().map(|&i| data.inputs[i].clone()).collect();
            let ys: Vec<u16> = chunk.iter().map(|&i| labels[i]).collect();
            if let Some(reg) = regime {
                augment(&mut xs, &data.shape, reg, &mut stream)?;
            }
            let (loss, grads) = loss_and_gradients(&trained, &xs, &ys)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, batch: batch_no });
            }
            epoch_loss += loss * chunk.len() as f64;
            opt.step(&mut trained, &grads, cfg);
        }
        epoch_losses.push(epoch_loss / data.len() as f64);
    }

    // Final accuracy on the data as trained: noisy labels, and one
    // deterministic augmentation pass when a regime was active.
    let final_train_accuracy = match regime {
        None => trained.accuracy(&data.inputs, &labels)?,
        Some(reg) => {
            let mut xs = data.inputs.clone();
            let mut r = rng::stream(cfg.seed, &[TAG_MEASURE]);
            augment(&mut xs, &data.shape, reg, &mut r)?;
            trained.accuracy(&xs, &labels)?
        }
    };

    Ok((trained, TrainLog { epoch_losses, final_train_accuracy, relabeled }))
}

fn apply_label_noise(
    labels: &[u16],
    k: usize,
    fraction: f64,
    rng: &mut ChaCha12Rng,
) -> (Vec<u16>, usize) {
    let mut noisy = labels.to_vec();
    let count = ((labels.len() as f64) * fraction).round() as usize;
    if count == 0 || k < 2 {
        return (noisy, 0);
    }
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    crate::data::shuffle(&mut idx, rng);
    for &i in idx.iter().take(count) {
        // uniformly drawn *different* label, so the stated fraction is corrupted
        let offset = rng.random_range(1..k as u16);
        noisy[i] = (noisy[i] + offset) % k as u16;
    }
    (noisy, count)
}

/// Mean cross-entropy of the batch, computed from logits for stability.
pub fn cross_entropy_loss(net: &Network, inputs: &[Vec<f64>], labels: &[u16]) -> Result<f64> {
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::EmptyData);
    }
    let logits_at = net.num_layers() - 1;
    let mut total = 0.0;
    for (x, &y) in inputs.iter().zip(labels) {
        let logits = net.forward_tap(x, logits_at)?;
        total += log_sum_exp(&logits) - logits[y as usize];
    }
    Ok(total / inputs.len() as f64)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Mean batch loss and its gradient with respect to every parameter,
/// computed by backpropagation. Exposed so gradient checks can compare
/// against finite differences of [`cross_entropy_loss`].
pub fn loss_and_gradients(
    net: &Network,
    inputs: &[Vec<f64>],
    labels: &[u16],
) -> Result<(f64, Vec<LayerParams>)> {
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::EmptyData);
    }
    let layers = net.layers();
    let n_layers = layers.len();
    let mut grads: Vec<LayerParams> = net
        .params()
        .iter()
        .map(|p| LayerParams { w: vec![0.0; p.w.len()], b: vec![0.0; p.b.len()] })
        .collect();
    let mut total_loss = 0.0;
    let scale = 1.0 / inputs.len() as f64;

    for (x, &y) in inputs.iter().zip(labels) {
        if (y as usize) >= net.num_classes() {
            return Err(Error::invalid(format!("label {y} out of range")));
        }
        // forward, keeping every boundary activation
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        acts.push(x.clone());
        for ell in 0..n_layers {
            let next = net.apply_layer(ell, acts.last().unwrap());
            acts.push(next);
        }
        let logits = &acts[n_layers - 1];
        total_loss += log_sum_exp(logits) - logits[y as usize];

        // fused softmax + cross-entropy gradient
        let p = &acts[n_layers];
        let mut delta: Vec<f64> = p.clone();
        delta[y as usize] -= 1.0;

        // backward through the remaining layers
        for ell in (0..n_layers - 1).rev() {
            delta = backprop_layer(net, ell, &acts[ell], &delta, &mut grads[ell]);
        }
    }
    for g in &mut grads {
        for v in g.w.iter_mut().chain(g.b.iter_mut()) {
            *v *= scale;
        }
    }
    Ok((total_loss * scale, grads))
}

/// Accumulates parameter gradients for layer `ell` (unscaled) and returns the
/// gradient with respect to its input.
fn backprop_layer(
    net: &Network,
    ell: usize,
    input: &[f64],
    delta: &[f64],
    grad: &mut LayerParams,
) -> Vec<f64> {
    let p = &net.params()[ell];
    match net.layers()[ell] {
        Layer::Dense { d_in, d_out } => {
            let mut dx = vec![0.0; d_in];
            for o in 0..d_out {
                let d = delta[o];
                grad.b[o] += d;
                let row = &p.w[o * d_in..(o + 1) * d_in];
                let grow = &mut grad.w[o * d_in..(o + 1) * d_in];
                for i in 0..d_in {
                    grow[i] += d * input[i];
                    dx[i] += row[i] * d;
                }
            }
            dx
        }
        Layer::Conv2d { c_in, c_out, kernel, stride } => {
            let Shape::Image { h, w, .. } = net.shape_at(ell).unwrap() else { unreachable!() };
            let Shape::Image { h: oh, w: ow, .. } = net.shape_at(ell + 1).unwrap() else {
                unreachable!()
            };
            let mut dx = vec![0.0; input.len()];
            for co in 0..c_out {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let d = delta[(co * oh + oy) * ow + ox];
                        if d == 0.0 {
                            continue;
                        }
                        grad.b[co] += d;
                        for ci in 0..c_in {
                            for ky in 0..kernel {
                                let iy = oy * stride + ky;
                                let in_base = (ci * h + iy) * w + ox * stride;
                                let w_base = ((co * c_in + ci) * kernel + ky) * kernel;
                                for kx in 0..kernel {
                                    grad.w[w_base + kx] += d * input[in_base + kx];
                                    dx[in_base + kx] += d * p.w[w_base + kx];
                                }
                            }
                        }
                    }
                }
            }
            dx
        }
        Layer::Relu => input
            .iter()
            .zip(delta)
            .map(|(&x, &d)| if x > 0.0 { d } else { 0.0 })
            .collect(),
        Layer::Flatten => delta.to_vec(),
        Layer::Softmax => unreachable!("softmax gradient is fused with the loss"),
    }
}

struct OptimizerState {
    step: u64,
    m: Vec<LayerParams>,
    v: Vec<LayerParams>,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl OptimizerState {
    fn new(cfg: &TrainConfig, params: &[LayerParams]) -> OptimizerState {
        let zeros = || {
            params
                .iter()
                .map(|p| LayerParams { w: vec![0.0; p.w.len()], b: vec![0.0; p.b.len()] })
                .collect()
        };
        match cfg.optimizer {
            Optimizer::Sgd => OptimizerState { step: 0, m: Vec::new(), v: Vec::new() },
            Optimizer::Adam => OptimizerState { step: 0, m: zeros(), v: zeros() },
        }
    }

    fn step(&mut self, net: &mut Network, grads: &[LayerParams], cfg: &TrainConfig) {
        self.step += 1;
        let lr = cfg.learning_rate;
        let wd = cfg.weight_decay;
        match cfg.optimizer {
            Optimizer::Sgd => {
                for (p, g) in net.params_mut().iter_mut().zip(grads) {
                    for (w, gw) in p.w.iter_mut().zip(&g.w) {
                        *w -= lr * (gw + wd * *w);
                    }
                    for (b, gb) in p.b.iter_mut().zip(&g.b) {
                        *b -= lr * gb;
                    }
                }
            }
            Optimizer::Adam => {
                let t = self.step as f64;
                let bc1 = 1.0 - ADAM_BETA1.powf(t);
                let bc2 = 1.0 - ADAM_BETA2.powf(t);
                for (idx, (p, g)) in net.params_mut().iter_mut().zip(grads).enumerate() {
                    let (m, v) = (&mut self.m[idx], &mut self.v[idx]);
                    let update = |val: &mut f64, grad: f64, m: &mut f64, v: &mut f64| {
                        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * grad;
                        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * grad * grad;
                        let mhat = *m / bc1;
                        let vhat = *v / bc2;
                        *val -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
                    };
                    for i in 0..p.w.len() {
                        let grad = g.w[i] + wd * p.w[i];
                        update(&mut p.w[i], grad, &mut m.w[i], &mut v.w[i]);
                    }
                    for i in 0..p.b.len() {
                        update(&mut p.b[i], g.b[i], &mut m.b[i], &mut v.b[i]);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_blobs;
    use crate::nn::Network;

    fn small_net(seed: u64, d: usize, hidden: usize, k: usize) -> Network {
        let mut r = rng::stream(seed, &[99]);
        Network::new(
            vec![
                Layer::Dense { d_in: d, d_out: hidden },
                Layer::Relu,
                Layer::Dense { d_in: hidden, d_out: k },
                Layer::Softmax,
            ],
            Shape::Flat(d),
            &mut r,
        )
        .unwrap()
    }

    fn config(epochs: usize) -> TrainConfig {
        TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 0.01,
            batch_size: 16,
            epochs,
            seed: 7,
            label_noise_fraction: 0.0,
            weight_decay: 0.0,
        }
    }

    #[test]
    fn zero_epochs_returns_input_weights() {
        let data = gen_blobs(2, 40, 3, 0.2, 5).unwrap();
        let net = small_net(1, 3, 8, 2);
        let (trained, log) = train(&net, &data, &config(0)).unwrap();
        assert_eq!(trained.params(), net.params());
        assert!(log.epoch_losses.is_empty());
    }

    /// Perceptron oracle: returns true when the two-class data admits a
    /// separating hyperplane (the perceptron converges on separable data).
    fn perceptron_separates(data: &Dataset) -> bool {
        let d = data.inputs[0].len();
        let mut w = vec![0.0; d + 1];
        for _ in 0..10_000 {
            let mut mistakes = 0;
            for (x, &y) in data.inputs.iter().zip(&data.labels) {
                let score: f64 = w[d] + x.iter().zip(&w[..d]).map(|(a, b)| a * b).sum::<f64>();
                let target = if y == 1 { 1.0 } else { -1.0 };
                if score * target <= 0.0 {
                    mistakes += 1;
                    for i in 0..d {
                        w[i] += target * x[i];
                    }
                    w[d] += target;
                }
            }
            if mistakes == 0 {
                return true;
            }
        }
        false
    }

    #[test]
    fn separable_blobs_reach_high_accuracy() {
        let data = gen_blobs(2, 60, 2, 0.05, 11).unwrap();
        assert!(perceptron_separates(&data), "oracle: blobs must be linearly separable");
        let (_, log) = train(&small_net(2, 2, 8, 2), &data, &config(200)).unwrap();
        assert!(log.final_train_accuracy >= 0.99, "accuracy {}", log.final_train_accuracy);
    }

    #[test]
    fn same_seed_bitwise_identical() {
        let data = gen_blobs(3, 48, 4, 0.3, 23).unwrap();
        let net = small_net(3, 4, 10, 3);
        let (a, _) = train(&net, &data, &config(5)).unwrap();
        let (b, _) = train(&net, &data, &config(5)).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn sgd_also_learns() {
        let data = gen_blobs(2, 60, 2, 0.05, 13).unwrap();
        let net = small_net(4, 2, 8, 2);
        let mut cfg = config(300);
        cfg.optimizer = Optimizer::Sgd;
        cfg.learning_rate = 0.5;
        let (_, log) = train(&net, &data, &cfg).unwrap();
        assert!(log.final_train_accuracy >= 0.95, "accuracy {}", log.final_train_accuracy);
    }

    #[test]
    fn label_noise_relabels_requested_fraction() {
        let labels: Vec<u16> = (0..100).map(|i| (i % 4) as u16).collect();
        let mut r = rng::stream(3, &[1]);
        let (noisy, n) = apply_label_noise(&labels, 4, 0.25, &mut r);
        assert_eq!(n, 25);
        let changed = labels.iter().zip(&noisy).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 25, "every relabeled point must actually change");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // central differences with step 1e-4, relative error 1e-3
        let mut r = rng::stream(21, &[5]);
        let net = Network::new(
            vec![
                Layer::Conv2d { c_in: 1, c_out: 2, kernel: 3, stride: 2 },
                Layer::Relu,
                Layer::Flatten,
                Layer::Dense { d_in: 2 * 3 * 3, d_out: 3 },
                Layer::Softmax,
            ],
            Shape::Image { c: 1, h: 7, w: 7 },
            &mut r,
        )
        .unwrap();
        let inputs: Vec<Vec<f64>> =
            (0..4).map(|s| (0..49).map(|i| ((s * 49 + i) as f64 * 0.173).sin() * 0.5 + 0.5).collect()).collect();
        let labels = vec![0u16, 1, 2, 1];
        let (_, grads) = loss_and_gradients(&net, &inputs, &labels).unwrap();
        let step = 1e-4;
        for layer in 0..net.num_layers() {
            for widx in 0..net.params()[layer].w.len() {
                let mut plus = net.clone();
                plus.params_mut()[layer].w[widx] += step;
                let mut minus = net.clone();
                minus.params_mut()[layer].w[widx] -= step;
                let fd = (cross_entropy_loss(&plus, &inputs, &labels).unwrap()
                    - cross_entropy_loss(&minus, &inputs, &labels).unwrap())
                    / (2.0 * step);
                let analytic = grads[layer].w[widx];
                let denom = fd.abs().max(analytic.abs()).max(1e-6);
                assert!(
                    (fd - analytic).abs() / denom < 1e-3,
                    "layer {layer} w[{widx}]: analytic {analytic} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let data = gen_blobs(2, 10, 2, 0.1, 1).unwrap();
        let net = small_net(5, 2, 4, 2);
        let mut cfg = config(1);
        cfg.batch_size = 0;
        assert!(train(&net, &data, &cfg).is_err());
        let mut cfg = config(1);
        cfg.learning_rate = 0.0;
        assert!(train(&net, &data, &cfg).is_err());
        let mut cfg = config(1);
        cfg.label_noise_fraction = 1.5;
        assert!(train(&net, &data, &cfg).is_err());
    }
}
