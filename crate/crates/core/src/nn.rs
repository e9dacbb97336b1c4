//! Dense feed-forward networks with hand-written backpropagation.
//!
//! A network is a chain of [`Layer`]s, each an affine map followed by an
//! elementwise [`Activation`]. Weight matrices are stored row-major with
//! shape `output_width x input_width`. The input layer is not represented:
//! a "4 layer" network in the usual counting has three parameterized layers.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Predictions are clamped into `[PROB_EPS, 1 - PROB_EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Sigmoid,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => math::sigmoid(z),
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output `a`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerSpec {
    #[cfg_attr(feature = "serde", serde(rename = "in"))]
    pub input_width: usize,
    #[cfg_attr(feature = "serde", serde(rename = "out"))]
    pub output_width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub const fn new(input_width: usize, output_width: usize, activation: Activation) -> Self {
        LayerSpec {
            input_width,
            output_width,
            activation,
        }
    }
}

/// Checks widths are positive and that consecutive layers chain.
pub fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Config("network needs at least one layer".to_string()));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.input_width == 0 || s.output_width == 0 {
            return Err(Error::Config(format!("layer {i} has a zero width")));
        }
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].output_width != pair[1].input_width {
            return Err(Error::Config(format!(
                "layer {} outputs {} values but layer {} expects {}",
                i,
                pair[0].output_width,
                i + 1,
                pair[1].input_width
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    spec: LayerSpec,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    pub fn spec(&self) -> LayerSpec {
        self.spec
    }

    /// Row-major `output_width x input_width` weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        let n_in = self.spec.input_width;
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(n_in)
                .zip(&self.biases)
                .map(|(row, b)| {
                    let z = row.iter().zip(input).fold(*b, |acc, (w, x)| acc + w * x);
                    self.spec.activation.apply(z)
                }),
        );
    }
}

/// A multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Gradient buffers shaped like an [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .flat_map(|v| v.iter_mut())
            .for_each(|g| *g *= factor);
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .fold(0.0, |m, g| if g.abs() > m { g.abs() } else { m })
    }
}

/// Reusable buffers for forward traces and backpropagated deltas.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    pub(crate) trace: Vec<Vec<f64>>,
    pub(crate) delta: Vec<f64>,
    pub(crate) prev: Vec<f64>,
}

/// Per-sample loss applied to a network's output units.
///
/// All variants treat outputs as probabilities and clamp them into
/// `[PROB_EPS, 1 - PROB_EPS]` before the logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `-[t ln p + (1 - t) ln(1 - p)]`.
    BinaryCrossEntropy,
    /// `-ln p`; the generator maximizes `ln D(G(z))`. Targets are ignored.
    GeneratorNonSaturating,
    /// `ln(1 - p)`; the generator minimizes `ln(1 - D(G(z)))`. Targets are ignored.
    GeneratorSaturating,
}

impl Loss {
    /// Loss value and its derivative with respect to the unclamped output.
    #[inline]
    pub fn eval(self, p: f64, target: f64) -> (f64, f64) {
        let clamped = !(PROB_EPS..=1.0 - PROB_EPS).contains(&p);
        let q = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        let (value, slope) = match self {
            Loss::BinaryCrossEntropy => (
                -(target * math::ln(q) + (1.0 - target) * math::ln(1.0 - q)),
                -target / q + (1.0 - target) / (1.0 - q),
            ),
            Loss::GeneratorNonSaturating => (-math::ln(q), -1.0 / q),
            Loss::GeneratorSaturating => (math::ln(1.0 - q), -1.0 / (1.0 - q)),
        };
        (value, if clamped { 0.0 } else { slope })
    }
}

impl Mlp {
    /// Builds a network from explicit parameters, checking every shape and
    /// that all entries are finite.
    pub fn from_parts(
        specs: &[LayerSpec],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_specs(specs)?;
        if weights.len() != specs.len() || biases.len() != specs.len() {
            return Err(Error::Config(format!(
                "{} layer specs but {} weight and {} bias blocks",
                specs.len(),
                weights.len(),
                biases.len()
            )));
        }
        let mut layers = Vec::with_capacity(specs.len());
        for (i, ((spec, w), b)) in specs.iter().zip(weights).zip(biases).enumerate() {
            if w.len() != spec.input_width * spec.output_width {
                return Err(Error::Config(format!(
                    "layer {i}: expected {}x{} weights, got {}",
                    spec.output_width,
                    spec.input_width,
                    w.len()
                )));
            }
            if b.len() != spec.output_width {
                return Err(Error::Config(format!(
                    "layer {i}: expected {} biases, got {}",
                    spec.output_width,
                    b.len()
                )));
            }
            if !w.iter().chain(&b).all(|v| v.is_finite()) {
                return Err(Error::Numeric(format!("layer {i} has non-finite parameters")));
            }
            layers.push(Layer {
                spec: *spec,
                weights: w,
                biases: b,
            });
        }
        Ok(Mlp { layers })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        validate_specs(specs)?;
        let layers = specs
            .iter()
            .map(|spec| {
                let limit = glorot_limit(spec.input_width, spec.output_width);
                let weights = (0..spec.input_width * spec.output_width)
                    .map(|_| rng.gen_range(-limit..=limit))
                    .collect();
                Layer {
                    spec: *spec,
                    weights,
                    biases: vec![0.0; spec.output_width],
                }
            })
            .collect();
        Ok(Mlp { layers })
    }

    pub fn init_seeded(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        Self::init(specs, &mut rng_from_seed(seed))
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].spec.input_width
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].spec.output_width
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_penalty(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|w| w * w)
            .sum()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_width() {
            return Err(Error::Shape {
                expected: self.input_width(),
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&current, &mut next);
            core::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    /// All layer outputs, with the input itself at index 0.
    pub fn forward_trace(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut trace = Vec::new();
        self.forward_trace_into(input, &mut trace)?;
        Ok(trace)
    }

    /// [`Mlp::forward_trace`] into reusable buffers.
    pub fn forward_trace_into(&self, input: &[f64], trace: &mut Vec<Vec<f64>>) -> Result<()> {
        self.check_input(input)?;
        trace.resize_with(self.layers.len() + 1, Vec::new);
        trace[0].clear();
        trace[0].extend_from_slice(input);
        for (i, layer) in self.layers.iter().enumerate() {
            let (done, rest) = trace.split_at_mut(i + 1);
            let out = &mut rest[0];
            layer.forward_into(&done[i], out);
            if !out.iter().all(|v| v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite activation in layer {i}")));
            }
        }
        Ok(())
    }

    /// Backpropagates `output_grad` (dL/d output) through a recorded trace.
    ///
    /// Parameter gradients are accumulated into `grads` when given; the
    /// gradient with respect to the network input is returned either way.
    pub fn backprop(
        &self,
        trace: &[Vec<f64>],
        output_grad: &[f64],
        grads: Option<&mut Gradients>,
    ) -> Vec<f64> {
        let mut scratch = Scratch::default();
        scratch.delta.extend_from_slice(output_grad);
        self.backprop_scratch(trace, grads, true, &mut scratch.delta, &mut scratch.prev);
        scratch.delta
    }

    /// Backprop with `delta` holding dL/d output on entry and dL/d input on exit.
    pub(crate) fn backprop_scratch(
        &self,
        trace: &[Vec<f64>],
        mut grads: Option<&mut Gradients>,
        want_input_grad: bool,
        delta: &mut Vec<f64>,
        prev: &mut Vec<f64>,
    ) {
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let out = &trace[l + 1];
            let inp = &trace[l];
            let n_in = layer.spec.input_width;
            for (d, a) in delta.iter_mut().zip(out) {
                *d *= layer.spec.activation.derivative_from_output(*a);
            }
            if let Some(g) = grads.as_deref_mut() {
                for ((row, gb), d) in g.weights[l]
                    .chunks_exact_mut(n_in)
                    .zip(g.biases[l].iter_mut())
                    .zip(delta.iter())
                {
                    *gb += d;
                    if *d != 0.0 {
                        row.iter_mut().zip(inp).for_each(|(gw, x)| *gw += d * x);
                    }
                }
            }
            if l == 0 && !want_input_grad {
                break;
            }
            prev.clear();
            prev.resize(n_in, 0.0);
            for (row, d) in layer.weights.chunks_exact(n_in).zip(delta.iter()) {
                if *d != 0.0 {
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                }
            }
            core::mem::swap(delta, prev);
        }
    }

    /// Gradients of the mean batch loss plus `lambda * sum(w^2)`.
    ///
    /// Returns the gradients and the regularized loss. Biases are not decayed.
    pub fn backward<'a, I>(&self, batch: I, loss: Loss, lambda: f64) -> Result<(Gradients, f64)>
    where
        I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
    {
        if !(lambda >= 0.0) {
            return Err(Error::Argument(format!("weight decay must be >= 0, got {lambda}")));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut scratch = Scratch::default();
        let mut total = 0.0;
        let mut count = 0usize;
        let out_w = self.output_width();
        let needs_target = loss == Loss::BinaryCrossEntropy;
        for (input, target) in batch {
            self.forward_trace_into(input, &mut scratch.trace)?;
            if needs_target && target.len() != out_w {
                return Err(Error::Shape {
                    expected: out_w,
                    got: target.len(),
                });
            }
            scratch.delta.clear();
            for (k, p) in scratch.trace[self.layers.len()].iter().enumerate() {
                let t = if needs_target { target[k] } else { 0.0 };
                let (v, g) = loss.eval(*p, t);
                total += v;
                scratch.delta.push(g);
            }
            let Scratch { trace, delta, prev } = &mut scratch;
            self.backprop_scratch(trace, Some(&mut grads), false, delta, prev);
            count += 1;
        }
        if count == 0 {
            return Err(Error::Argument("empty batch".to_string()));
        }
        let inv = 1.0 / count as f64;
        grads.scale(inv);
        let mut value = total * inv;
        if lambda > 0.0 {
            value += lambda * self.weight_penalty();
            for (g, layer) in grads.weights.iter_mut().zip(&self.layers) {
                g.iter_mut()
                    .zip(&layer.weights)
                    .for_each(|(gw, w)| *gw += 2.0 * lambda * w);
            }
        }
        if !value.is_finite() {
            return Err(Error::Numeric("non-finite loss".to_string()));
        }
        Ok((grads, value))
    }

    /// Plain gradient descent step `w <- w - lr * g`.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        let shapes_match = grads.weights.len() == self.layers.len()
            && grads.biases.len() == self.layers.len()
            && self.layers.iter().zip(&grads.weights).zip(&grads.biases).all(
                |((l, gw), gb)| l.weights.len() == gw.len() && l.biases.len() == gb.len(),
            );
        if !shapes_match {
            return Err(Error::Argument(
                "gradient shape does not match network".to_string(),
            ));
        }
        for ((layer, gw), gb) in self.layers.iter_mut().zip(&grads.weights).zip(&grads.biases) {
            layer
                .weights
                .iter_mut()
                .zip(gw)
                .for_each(|(w, g)| *w -= learning_rate * g);
            layer
                .biases
                .iter_mut()
                .zip(gb)
                .for_each(|(b, g)| *b -= learning_rate * g);
        }
        Ok(())
    }
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    math::sqrt(6.0 / (fan_in + fan_out) as f64)
}

/// Optimizer settings shared by the GAN and the classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay_lambda: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".to_string()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".to_string()));
        }
        if !(self.weight_decay_lambda >= 0.0) {
            return Err(Error::Config(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay_lambda
            )));
        }
        Ok(())
    }
}
