use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    /// out x in weight matrix.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

/// Fully connected network; each layer owns its activation so trained
/// networks can be split at the latent boundary without losing the hidden
/// nonlinearity.
#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<Layer>,
}

pub struct LayerGrads {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Mlp {
    /// Glorot-uniform initialization in +-sqrt(6 / (fan_in + fan_out)),
    /// hidden layers use `hidden_act`, the output layer is linear.
    pub fn new(widths: &[usize], hidden_act: Activation, seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config(format!(
                "MLP needs at least input and output widths, got {widths:?}"
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::Config(format!("zero layer width in {widths:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_layers = widths.len() - 1;
        let layers = (0..n_layers)
            .map(|l| {
                let (fan_in, fan_out) = (widths[l], widths[l + 1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights =
                    DMatrix::from_fn(fan_out, fan_in, |_, _| rng.gen_range(-bound..=bound));
                Layer {
                    weights,
                    bias: DVector::zeros(fan_out),
                    activation: if l + 1 == n_layers {
                        Activation::Identity
                    } else {
                        hidden_act
                    },
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("MLP needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].weights.nrows() != w[1].weights.ncols() {
                return Err(Error::Dimension(format!(
                    "layer output width {} feeds layer input width {}",
                    w[0].weights.nrows(),
                    w[1].weights.ncols()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut Vec<Layer> {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().weights.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Split into a prefix of `n_front` layers and the remainder.
    pub fn split_at(self, n_front: usize) -> Result<(Mlp, Mlp)> {
        if n_front == 0 || n_front >= self.layers.len() {
            return Err(Error::Config(format!(
                "cannot split {}-layer MLP at {n_front}",
                self.layers.len()
            )));
        }
        let mut front = self.layers;
        let back = front.split_off(n_front);
        Ok((Mlp { layers: front }, Mlp { layers: back }))
    }

    /// Batched forward pass over rows of `inputs` (n x input_width).
    pub fn forward(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if inputs.ncols() != self.input_width() {
            return Err(Error::Dimension(format!(
                "inputs have {} columns, MLP expects {}",
                inputs.ncols(),
                self.input_width()
            )));
        }
        let mut a = inputs.clone();
        for layer in &self.layers {
            a = self.layer_forward(layer, &a);
        }
        Ok(a)
    }

    fn layer_forward(&self, layer: &Layer, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = a * layer.weights.transpose();
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                z[(i, j)] = layer.activation.apply(z[(i, j)] + layer.bias[j]);
            }
        }
        z
    }

    /// Mean squared error over batch and output dimensions.
    pub fn loss(&self, inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<f64> {
        let pred = self.forward(inputs)?;
        if pred.shape() != targets.shape() {
            return Err(Error::Dimension(format!(
                "predictions {:?} vs targets {:?}",
                pred.shape(),
                targets.shape()
            )));
        }
        let diff = pred - targets;
        Ok(diff.iter().map(|d| d * d).sum::<f64>() / diff.len() as f64)
    }

    /// Analytic gradient of the mean-squared loss, and the loss itself.
    pub fn backward(
        &self,
        inputs: &DMatrix<f64>,
        targets: &DMatrix<f64>,
    ) -> Result<(f64, Vec<LayerGrads>)> {
        if inputs.ncols() != self.input_width() {
            return Err(Error::Dimension(format!(
                "inputs have {} columns, MLP expects {}",
                inputs.ncols(),
                self.input_width()
            )));
        }
        if targets.ncols() != self.output_width() || targets.nrows() != inputs.nrows() {
            return Err(Error::Dimension(format!(
                "targets {:?} incompatible with inputs {:?} and output width {}",
                targets.shape(),
                inputs.shape(),
                self.output_width()
            )));
        }

        // Forward pass caching pre-activations.
        let mut activations = vec![inputs.clone()];
        let mut pre_acts = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let a = activations.last().unwrap();
            let mut z = a * layer.weights.transpose();
            for i in 0..z.nrows() {
                for j in 0..z.ncols() {
                    z[(i, j)] += layer.bias[j];
                }
            }
            let act = z.map_with_location(|_, _, v| layer.activation.apply(v));
            pre_acts.push(z);
            activations.push(act);
        }

        let output = activations.last().unwrap();
        let diff = output - targets;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / diff.len() as f64;

        // delta for the output layer: dL/dz, with loss averaged over all
        // entries.
        let scale = 2.0 / diff.len() as f64;
        let last = self.layers.len() - 1;
        let mut delta = DMatrix::from_fn(diff.nrows(), diff.ncols(), |i, j| {
            scale * diff[(i, j)] * self.layers[last].activation.derivative(pre_acts[last][(i, j)])
        });

        let mut grads: Vec<LayerGrads> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let gw = delta.transpose() * &activations[l];
            let gb = DVector::from_fn(delta.ncols(), |j, _| delta.column(j).sum());
            grads.push(LayerGrads {
                weights: gw,
                bias: gb,
            });
            if l > 0 {
                let back = &delta * &self.layers[l].weights;
                delta = DMatrix::from_fn(back.nrows(), back.ncols(), |i, j| {
                    back[(i, j)] * self.layers[l - 1].activation.derivative(pre_acts[l - 1][(i, j)])
                });
            }
        }
        grads.reverse();
        Ok((loss, grads))
    }

    /// One gradient-descent step with optional L2 weight decay (applied to
    /// weights only).
    pub fn apply_grads(&mut self, grads: &[LayerGrads], learning_rate: f64, weight_decay: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, gw) in layer.weights.iter_mut().zip(g.weights.iter()) {
                *w -= learning_rate * (gw + weight_decay * *w);
            }
            for (b, gb) in layer.bias.iter_mut().zip(g.bias.iter()) {
                *b -= learning_rate * gb;
            }
        }
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for layer in &self.layers {
            out.extend(layer.weights.iter());
            out.extend(layer.bias.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) {
        let mut it = params.iter();
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut() {
                *w = *it.next().unwrap();
            }
            for b in layer.bias.iter_mut() {
                *b = *it.next().unwrap();
            }
        }
    }
}
