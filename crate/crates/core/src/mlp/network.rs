//! Fully connected network with the symmetric sigmoid (`tanh`) on every
//! layer, output layer included.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::normalize::Normalizer;
use super::MlpError;
use crate::types::{JointState, TorqueVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

impl Default for NetworkSpec {
    /// Four joint-state inputs, six hidden layers of 26, two torque outputs.
    fn default() -> Self {
        Self {
            input_dim: 4,
            hidden: vec![26; 6],
            output_dim: 2,
        }
    }
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden,
            output_dim,
        }
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        if self.hidden.is_empty() {
            return Err(MlpError::InvalidSpec("at least one hidden layer is required".into()));
        }
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(MlpError::InvalidSpec("layer widths must be positive".into()));
        }
        Ok(())
    }

    /// Widths of every layer from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend(&self.hidden);
        w.push(self.output_dim);
        w
    }

    pub fn parameter_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Dense layer, weights stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub(crate) inputs: usize,
    pub(crate) outputs: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) biases: Vec<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.biases))
        {
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            *o = z.tanh();
        }
    }
}

/// Network weights plus the input/target normalisation they were trained in.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    pub(crate) layers: Vec<Layer>,
    pub(crate) input_norm: Normalizer,
    pub(crate) output_norm: Normalizer,
}

/// Per-layer gradient buffers, same shapes as the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().chain(self.biases.iter_mut()).for_each(|g| g.fill(0.0));
    }

    /// Same flat ordering as [`Network::parameter`].
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

/// Reusable activations for forward/backward passes.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    activations: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Scratch {
    pub(crate) fn new(net: &Network) -> Self {
        let widths = net.spec.widths();
        Self {
            activations: widths.iter().map(|&w| vec![0.0; w]).collect(),
            deltas: widths[1..].iter().map(|&w| vec![0.0; w]).collect(),
        }
    }
}

impl Network {
    /// Glorot-uniform weights `U(+-sqrt(6 / (fan_in + fan_out)))`, zero
    /// biases, identity normalisers.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self, MlpError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = spec.widths();
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out)
                        .map(|_| rng.random_range(-limit..limit))
                        .collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self {
            input_norm: Normalizer::identity(spec.input_dim),
            output_norm: Normalizer::identity(spec.output_dim),
            spec,
            layers,
        })
    }

    /// Assembles a network from parts, checking that every shape agrees.
    pub fn from_parts(
        layers: Vec<Layer>,
        input_norm: Normalizer,
        output_norm: Normalizer,
    ) -> Result<Self, MlpError> {
        let (first, last) = match (layers.first(), layers.last()) {
            (Some(f), Some(l)) if layers.len() >= 2 => (f, l),
            _ => return Err(MlpError::DimMismatch("need at least two layers".into())),
        };
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(MlpError::DimMismatch("adjacent layer widths disagree".into()));
            }
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(MlpError::DimMismatch("layer array length mismatch".into()));
            }
        }
        if input_norm.dim() != first.inputs || output_norm.dim() != last.outputs {
            return Err(MlpError::DimMismatch("normaliser width mismatch".into()));
        }
        let spec = NetworkSpec::new(
            first.inputs,
            layers[..layers.len() - 1].iter().map(|l| l.outputs).collect(),
            last.outputs,
        );
        spec.validate().map_err(|e| MlpError::DimMismatch(e.to_string()))?;
        Ok(Self {
            spec,
            layers,
            input_norm,
            output_norm,
        })
    }

    pub(crate) fn layer(inputs: usize, outputs: usize, weights: Vec<f64>, biases: Vec<f64>) -> Layer {
        Layer {
            inputs,
            outputs,
            weights,
            biases,
        }
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_normalizer(&self) -> &Normalizer {
        &self.input_norm
    }

    pub fn output_normalizer(&self) -> &Normalizer {
        &self.output_norm
    }

    pub fn set_normalizers(&mut self, input: Normalizer, output: Normalizer) -> Result<(), MlpError> {
        if input.dim() != self.spec.input_dim || output.dim() != self.spec.output_dim {
            return Err(MlpError::DimMismatch("normaliser width mismatch".into()));
        }
        self.input_norm = input;
        self.output_norm = output;
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Flat parameter view: layer by layer, weights then biases.
    pub fn parameter(&self, index: usize) -> f64 {
        let (l, is_bias, i) = self.locate(index);
        if is_bias {
            self.layers[l].biases[i]
        } else {
            self.layers[l].weights[i]
        }
    }

    pub fn set_parameter(&mut self, index: usize, value: f64) {
        let (l, is_bias, i) = self.locate(index);
        if is_bias {
            self.layers[l].biases[i] = value;
        } else {
            self.layers[l].weights[i] = value;
        }
    }

    fn locate(&self, mut index: usize) -> (usize, bool, usize) {
        for (l, layer) in self.layers.iter().enumerate() {
            if index < layer.weights.len() {
                return (l, false, index);
            }
            index -= layer.weights.len();
            if index < layer.biases.len() {
                return (l, true, index);
            }
            index -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    /// Forward pass in normalised units.
    pub fn forward_normalized(&self, x: &[f64]) -> Vec<f64> {
        let mut scratch = Scratch::new(self);
        self.forward_scratch(x, &mut scratch).to_vec()
    }

    pub(crate) fn forward_scratch<'s>(&self, x: &[f64], s: &'s mut Scratch) -> &'s [f64] {
        s.activations[0].copy_from_slice(&x[..self.spec.input_dim]);
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = s.activations.split_at_mut(l + 1);
            layer.forward_into(&done[l], &mut rest[0]);
        }
        &s.activations[self.layers.len()]
    }

    /// Forward pass in physical units: normalise, propagate, denormalise.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let xn = self.input_norm.forward(x);
        self.output_norm.inverse(&self.forward_normalized(&xn))
    }

    /// Accumulates `d loss / d params` for one normalised sample, where the
    /// loss contribution is `weight * sum_j (y_j - t_j)^2`. Returns the
    /// squared error of the sample.
    pub(crate) fn backprop_sample(
        &self,
        x: &[f64],
        target: &[f64],
        weight: f64,
        s: &mut Scratch,
        grad: &mut Gradients,
    ) -> f64 {
        self.forward_scratch(x, s);
        let n = self.layers.len();
        let mut sq = 0.0;
        {
            let out = &s.activations[n];
            let delta = &mut s.deltas[n - 1];
            for j in 0..out.len() {
                let e = out[j] - target[j];
                sq += e * e;
                delta[j] = 2.0 * weight * e * (1.0 - out[j] * out[j]);
            }
        }
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            {
                let input = &s.activations[l];
                let delta = &s.deltas[l];
                let gw = &mut grad.weights[l];
                let gb = &mut grad.biases[l];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    gb[o] += d;
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
            }
            if l > 0 {
                let (prev, cur) = s.deltas.split_at_mut(l);
                let below = &mut prev[l - 1];
                let delta = &cur[0];
                let act = &s.activations[l];
                for (i, b) in below.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for o in 0..layer.outputs {
                        acc += layer.weights[o * layer.inputs + i] * delta[o];
                    }
                    *b = acc * (1.0 - act[i] * act[i]);
                }
            }
        }
        sq
    }

    /// Mean squared error over all outputs of the given normalised samples,
    /// and its gradient.
    pub fn loss_and_gradient(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> (f64, Gradients) {
        let mut grad = Gradients::zeros_like(self);
        let mut s = Scratch::new(self);
        let weight = 1.0 / (inputs.len() * self.spec.output_dim) as f64;
        let mut sq = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            sq += self.backprop_sample(x, t, weight, &mut s, &mut grad);
        }
        (sq * weight, grad)
    }

    /// Loss only, same definition as [`Network::loss_and_gradient`].
    pub fn loss(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> f64 {
        let mut s = Scratch::new(self);
        let mut sq = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            let y = self.forward_scratch(x, &mut s);
            sq += y.iter().zip(*t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        sq / (inputs.len() * self.spec.output_dim) as f64
    }

    /// Torque prediction for a joint state. Panics unless the network is
    /// 4 -> 2; use [`Network::check_torque_layout`] first on untrusted models.
    pub fn predict_torque(&self, p: &JointState) -> TorqueVector {
        assert!(self.check_torque_layout().is_ok(), "network is not 4 -> 2");
        let y = self.forward(&p.to_array());
        TorqueVector::new(y[0], y[1])
    }

    pub fn check_torque_layout(&self) -> Result<(), MlpError> {
        if self.spec.input_dim != 4 || self.spec.output_dim != 2 {
            return Err(MlpError::DimMismatch(format!(
                "torque predictor must be 4 -> 2, got {} -> {}",
                self.spec.input_dim, self.spec.output_dim
            )));
        }
        Ok(())
    }
}
