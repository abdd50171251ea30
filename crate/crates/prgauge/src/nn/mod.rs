//! Minimal feed-forward networks with a forward pass that can be split at any
//! layer boundary.
//!
//! A network maps inputs to a distribution over `k` classes. Writing `L` for
//! the number of layers, position `ℓ` refers to the boundary after the first
//! `ℓ` layers: `x⁽⁰⁾` is the input, `x⁽ℓ⁾` the activation after layer `ℓ`.
//! [`Network::forward_tap`] computes `x⁽ℓ⁾`; [`Network::forward_from`] resumes
//! from a boundary and runs the remaining layers. Composing the two at any
//! boundary reproduces the full forward pass bit for bit, which is what lets a
//! perturbation be injected at an arbitrary depth.
//!
//! Networks end in an explicit [`Layer::Softmax`], so the final output always
//! lies on the probability simplex.

mod io;
mod train;

pub use io::{load_model, save_model, ModelFile};
pub use train::{
    cross_entropy_loss, loss_and_gradients, train, train_with, Optimizer, TrainConfig, TrainLog,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::Shape;

/// Layer vocabulary. `Dense` and `Conv2d` carry parameters; the rest are fixed maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Dense { d_in: usize, d_out: usize },
    Conv2d { c_in: usize, c_out: usize, kernel: usize, stride: usize },
    Relu,
    Flatten,
    Softmax,
}

impl Layer {
    pub fn is_parameterized(&self) -> bool {
        matches!(self, Layer::Dense { .. } | Layer::Conv2d { .. })
    }

    /// Shape produced when this layer is applied to `input`.
    pub fn output_shape(&self, input: &Shape) -> Result<Shape> {
        match *self {
            Layer::Dense { d_in, d_out } => match *input {
                Shape::Flat(d) if d == d_in => Ok(Shape::Flat(d_out)),
                other => Err(Error::shape(format!("[{d_in}]"), other.to_string())),
            },
            Layer::Conv2d { c_in, c_out, kernel, stride } => match *input {
                Shape::Image { c, h, w } if c == c_in && h >= kernel && w >= kernel => {
                    if stride == 0 || kernel == 0 {
                        return Err(Error::invalid("conv2d kernel and stride must be positive"));
                    }
                    Ok(Shape::Image {
                        c: c_out,
                        h: (h - kernel) / stride + 1,
                        w: (w - kernel) / stride + 1,
                    })
                }
                other => Err(Error::shape(
                    format!("image with {c_in} channels, extent >= {kernel}"),
                    other.to_string(),
                )),
            },
            Layer::Relu => Ok(*input),
            Layer::Flatten => Ok(Shape::Flat(input.len())),
            Layer::Softmax => match *input {
                Shape::Flat(d) if d > 0 => Ok(Shape::Flat(d)),
                other => Err(Error::shape("non-empty flat vector", other.to_string())),
            },
        }
    }

    fn param_counts(&self) -> (usize, usize) {
        match *self {
            Layer::Dense { d_in, d_out } => (d_in * d_out, d_out),
            Layer::Conv2d { c_in, c_out, kernel, .. } => (c_out * c_in * kernel * kernel, c_out),
            _ => (0, 0),
        }
    }
}

/// Weights for one layer: empty for parameterless layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl LayerParams {
    /// Placeholder for layers without parameters.
    pub fn empty() -> Self {
        LayerParams { w: Vec::new(), b: Vec::new() }
    }
}

/// A validated feed-forward network.
///
/// Immutable after construction/training; forward passes are `&self` and safe
/// to run from many threads.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    params: Vec<LayerParams>,
    input_shape: Shape,
    /// Shape at every boundary: `shapes[ℓ]` is the shape of `x⁽ℓ⁾`, so
    /// `shapes.len() == layers.len() + 1`.
    shapes: Vec<Shape>,
    num_classes: usize,
}

impl Network {
    /// Builds a network with fan-in-scaled uniform weights: `U(−1/√fan_in, 1/√fan_in)`,
    /// zero biases.
    pub fn new<R: Rng>(layers: Vec<Layer>, input_shape: Shape, rng: &mut R) -> Result<Network> {
        let shapes = Self::validate_arch(&layers, input_shape)?;
        let params = layers
            .iter()
            .map(|layer| {
                let (nw, nb) = layer.param_counts();
                if nw == 0 {
                    return LayerParams::empty();
                }
                let fan_in = match *layer {
                    Layer::Dense { d_in, .. } => d_in,
                    Layer::Conv2d { c_in, kernel, .. } => c_in * kernel * kernel,
                    _ => unreachable!(),
                };
                let scale = 1.0 / (fan_in as f64).sqrt();
                LayerParams {
                    w: (0..nw).map(|_| rng.random_range(-scale..scale)).collect(),
                    b: vec![0.0; nb],
                }
            })
            .collect();
        let num_classes = shapes.last().unwrap().len();
        Ok(Network { layers, params, input_shape, shapes, num_classes })
    }

    /// Rebuilds a network from explicit parameters, re-running all validation.
    pub fn with_params(
        layers: Vec<Layer>,
        input_shape: Shape,
        params: Vec<LayerParams>,
    ) -> Result<Network> {
        let shapes = Self::validate_arch(&layers, input_shape)?;
        if params.len() != layers.len() {
            return Err(Error::invalid(format!(
                "expected {} parameter blocks, got {}",
                layers.len(),
                params.len()
            )));
        }
        for (i, (layer, p)) in layers.iter().zip(&params).enumerate() {
            let (nw, nb) = layer.param_counts();
            if p.w.len() != nw || p.b.len() != nb {
                return Err(Error::invalid(format!(
                    "layer {i}: expected {nw}+{nb} parameters, got {}+{}",
                    p.w.len(),
                    p.b.len()
                )));
            }
            if p.w.iter().chain(&p.b).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("layer {i}: non-finite weight")));
            }
        }
        let num_classes = shapes.last().unwrap().len();
        Ok(Network { layers, params, input_shape, shapes, num_classes })
    }

    fn validate_arch(layers: &[Layer], input_shape: Shape) -> Result<Vec<Shape>> {
        if layers.is_empty() {
            return Err(Error::invalid("network must have at least one layer"));
        }
        if !matches!(layers.last(), Some(Layer::Softmax)) {
            return Err(Error::invalid("final layer must be softmax"));
        }
        if layers[..layers.len() - 1].iter().any(|l| matches!(l, Layer::Softmax)) {
            return Err(Error::invalid("softmax may only appear as the final layer"));
        }
        let mut shapes = vec![input_shape];
        for layer in layers {
            let next = layer.output_shape(shapes.last().unwrap())?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &[LayerParams] {
        &self.params
    }

    /// Trainer-internal mutable access; networks stay immutable to consumers.
    pub(crate) fn params_mut(&mut self) -> &mut [LayerParams] {
        &mut self.params
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Shape of `x⁽ℓ⁾` for `0 ≤ ℓ ≤ num_layers`.
    pub fn shape_at(&self, ell: usize) -> Result<Shape> {
        self.shapes
            .get(ell)
            .copied()
            .ok_or(Error::LayerOutOfRange { index: ell, len: self.layers.len() })
    }

    /// Boundary position for a perturbation level.
    ///
    /// Level 0 is the raw input. Level `j ≥ 1` is the output of the `j`-th
    /// parameterized layer together with its trailing activation, which is the
    /// "layer 1" convention used when perturbing hidden representations.
    pub fn tap_for_level(&self, level: usize) -> Result<usize> {
        if level == 0 {
            return Ok(0);
        }
        let mut seen = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.is_parameterized() {
                seen += 1;
                if seen == level {
                    let mut pos = i + 1;
                    if matches!(self.layers.get(pos), Some(Layer::Relu)) {
                        pos += 1;
                    }
                    return Ok(pos);
                }
            }
        }
        Err(Error::invalid(format!(
            "perturbation level {level} exceeds the {seen} parameterized layers"
        )))
    }

    fn apply_layer(&self, idx: usize, x: &[f64]) -> Vec<f64> {
        let p = &self.params[idx];
        match self.layers[idx] {
            Layer::Dense { d_in, d_out } => {
                let mut out = Vec::with_capacity(d_out);
                for o in 0..d_out {
                    let row = &p.w[o * d_in..(o + 1) * d_in];
                    let mut acc = p.b[o];
                    for (wi, xi) in row.iter().zip(x) {
                        acc += wi * xi;
                    }
                    out.push(acc);
                }
                out
            }
            Layer::Conv2d { c_in, c_out, kernel, stride } => {
                let Shape::Image { h, w, .. } = self.shapes[idx] else { unreachable!() };
                let Shape::Image { h: oh, w: ow, .. } = self.shapes[idx + 1] else {
                    unreachable!()
                };
                let mut out = vec![0.0; c_out * oh * ow];
                for co in 0..c_out {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut acc = p.b[co];
                            for ci in 0..c_in {
                                for ky in 0..kernel {
                                    let iy = oy * stride + ky;
                                    let in_row = &x[(ci * h + iy) * w..];
                                    let w_row =
                                        &p.w[((co * c_in + ci) * kernel + ky) * kernel..];
                                    for kx in 0..kernel {
                                        acc += w_row[kx] * in_row[ox * stride + kx];
                                    }
                                }
                            }
                            out[(co * oh + oy) * ow + ox] = acc;
                        }
                    }
                }
                out
            }
            Layer::Relu => x.iter().map(|&v| v.max(0.0)).collect(),
            Layer::Flatten => x.to_vec(),
            Layer::Softmax => softmax(x),
        }
    }

    fn check_len(&self, ell: usize, x: &[f64]) -> Result<()> {
        let expect = self.shape_at(ell)?;
        if x.len() != expect.len() {
            return Err(Error::shape(
                format!("{} values at position {ell}", expect.len()),
                format!("{} values", x.len()),
            ));
        }
        Ok(())
    }

    /// Computes `x⁽ℓ⁾`: the activation after the first `ell` layers.
    /// `ell = 0` returns the input unchanged.
    pub fn forward_tap(&self, x: &[f64], ell: usize) -> Result<Vec<f64>> {
        self.check_len(0, x)?;
        if ell > self.layers.len() {
            return Err(Error::LayerOutOfRange { index: ell, len: self.layers.len() });
        }
        let mut h = x.to_vec();
        for idx in 0..ell {
            h = self.apply_layer(idx, &h);
        }
        Ok(h)
    }

    /// Resumes from boundary `ell`, mapping `x⁽ℓ⁾` to the class distribution.
    /// `forward_from(0, x)` is the full forward pass.
    pub fn forward_from(&self, ell: usize, h: &[f64]) -> Result<Vec<f64>> {
        if ell > self.layers.len() {
            return Err(Error::LayerOutOfRange { index: ell, len: self.layers.len() });
        }
        self.check_len(ell, h)?;
        let mut h = h.to_vec();
        for idx in ell..self.layers.len() {
            h = self.apply_layer(idx, &h);
        }
        Ok(h)
    }

    /// Full forward pass to the class distribution.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_from(0, x)
    }

    /// Predicted class: argmax with ties broken toward the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Fraction of samples whose predicted class matches the label.
    pub fn accuracy(&self, inputs: &[Vec<f64>], labels: &[u16]) -> Result<f64> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::EmptyData);
        }
        let mut correct = 0usize;
        for (x, &y) in inputs.iter().zip(labels) {
            if (y as usize) >= self.num_classes {
                return Err(Error::invalid(format!(
                    "label {y} out of range for {} classes",
                    self.num_classes
                )));
            }
            if self.predict(x)? == y as usize {
                correct += 1;
            }
        }
        Ok(correct as f64 / inputs.len() as f64)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Index of the maximum; the lowest index wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}
