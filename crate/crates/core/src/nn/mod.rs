//! Dense feed-forward networks with reverse-mode gradients.

mod checkpoint;
mod tape;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use tape::{GradTape, ParamGrads};
pub use train::{train, EpochStats, OptimizerConfig, TrainedReport};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::seed::{self, stream};
use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative; the ReLU subgradient at exactly 0 is 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// One affine layer `a' = act(W a + b)` with `W` stored `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weight: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        if weight.shape().len() != 2 {
            return Err(Error::dims("[out, in]", weight.shape()));
        }
        if bias.shape() != [weight.shape()[0]] {
            return Err(Error::dims([weight.shape()[0]], bias.shape()));
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    /// Pre-activations `W a + b`.
    pub(crate) fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        let n_in = self.in_dim();
        let w = self.weight.data();
        let b = self.bias.data();
        out.clear();
        out.extend((0..self.out_dim()).map(|o| {
            let row = &w[o * n_in..(o + 1) * n_in];
            row.iter().zip(input).fold(b[o], |acc, (wi, xi)| acc + wi * xi)
        }));
    }

    pub fn bits_eq(&self, other: &Layer) -> bool {
        self.activation == other.activation
            && self.weight.bits_eq(&other.weight)
            && self.bias.bits_eq(&other.bias)
    }
}

/// Which parameters receive multiplicative noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum NoiseScope {
    #[default]
    WeightsAndBiases,
    WeightsOnly,
}

impl NoiseScope {
    pub fn name(self) -> &'static str {
        match self {
            NoiseScope::WeightsAndBiases => "all",
            NoiseScope::WeightsOnly => "weights",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(NoiseScope::WeightsAndBiases),
            "weights" => Some(NoiseScope::WeightsOnly),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

impl MlpModel {
    /// Validates the layer chain; the last layer must emit raw logits.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::Parameter("model needs at least one layer".into()));
        };
        if last.activation != Activation::Identity {
            return Err(Error::Parameter("final layer must use the identity activation".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dims(pair[0].out_dim(), pair[1].in_dim()));
            }
        }
        Ok(Self { layers })
    }

    /// He-normal weights, zero biases, ReLU hidden layers.
    ///
    /// `dims` lists every width from input to output, e.g. `[2, 16, 16, 2]`.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Parameter(format!("invalid layer widths {dims:?}")));
        }
        let mut rng = seed::rng(seed::mix(seed, stream::INIT, 0));
        let n_layers = dims.len() - 1;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let (n_in, n_out) = (d[0], d[1]);
                let scale = (2.0 / n_in as f64).sqrt();
                let w = (0..n_in * n_out)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let activation = if i + 1 == n_layers {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Layer::new(
                    Tensor::new(vec![n_out, n_in], w).expect("shape"),
                    Tensor::zeros(&[n_out]),
                    activation,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::dims([self.input_dim()], x.shape()));
        }
        Ok(())
    }

    /// Logits for one input. Any input shape with `input_dim` entries is
    /// accepted and read in row-major order.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        Ok(Tensor::from_vec(self.forward_slice(x.data())))
    }

    pub(crate) fn forward_slice(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for layer in &self.layers {
            layer.affine(&a, &mut z);
            a.clear();
            a.extend(z.iter().map(|&v| layer.activation.apply(v)));
        }
        a
    }

    /// Single logit `f_c(x)`.
    pub fn logit(&self, x: &Tensor, class_index: usize) -> Result<f64> {
        self.check_class(class_index)?;
        Ok(self.forward(x)?.data()[class_index])
    }

    pub(crate) fn check_class(&self, class_index: usize) -> Result<()> {
        if class_index >= self.output_dim() {
            return Err(Error::Index {
                index: class_index,
                len: self.output_dim(),
            });
        }
        Ok(())
    }

    /// Records the forward pass for a later backward sweep.
    pub fn forward_tape(&self, x: &Tensor) -> Result<GradTape> {
        self.check_input(x)?;
        Ok(GradTape::record(self, x.data()))
    }

    /// `∂f_c/∂x`, shaped like `x`.
    pub fn grad_input(&self, x: &Tensor, class_index: usize) -> Result<Tensor> {
        self.check_class(class_index)?;
        let tape = self.forward_tape(x)?;
        let mut seed = vec![0.0; self.output_dim()];
        seed[class_index] = 1.0;
        let g = tape.backward_input(self, &seed);
        Tensor::new(x.shape().to_vec(), g)
    }

    /// Argmax of the logits; ties go to the lowest class index.
    pub fn predict(&self, x: &Tensor) -> Result<usize> {
        Ok(argmax(self.forward(x)?.data()))
    }

    /// Fraction of samples whose prediction equals the label.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyInput("accuracy needs a nonempty dataset".into()));
        }
        let mut correct = 0usize;
        for (x, &y) in data.inputs().iter().zip(data.labels()) {
            if self.predict(x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }

    /// Copy with every parameter multiplied by an independent `N(1, σ²)` draw.
    ///
    /// Draws are taken layer by layer, weights (row-major) before biases,
    /// from a generator seeded with `child_seed`. With `WeightsOnly` the
    /// bias draws are skipped entirely. `σ = 0` returns an exact copy.
    pub fn perturb_weights(&self, sigma_ng: f64, child_seed: u64, scope: NoiseScope) -> Result<MlpModel> {
        if !(sigma_ng >= 0.0) || !sigma_ng.is_finite() {
            return Err(Error::Parameter(format!("sigma_ng must be finite and >= 0, got {sigma_ng}")));
        }
        let mut out = self.clone();
        if sigma_ng == 0.0 {
            return Ok(out);
        }
        let mut rng = seed::rng(child_seed);
        for layer in out.layers_mut() {
            for w in layer.weight.data_mut() {
                let eta = 1.0 + sigma_ng * rng.sample::<f64, _>(StandardNormal);
                *w *= eta;
            }
            if scope == NoiseScope::WeightsAndBiases {
                for b in layer.bias.data_mut() {
                    let eta = 1.0 + sigma_ng * rng.sample::<f64, _>(StandardNormal);
                    *b *= eta;
                }
            }
        }
        Ok(out)
    }

    /// Fresh parameters drawn i.i.d. from `N(0, std²)`, same architecture.
    pub fn randomized(&self, std: f64, seed: u64) -> Result<MlpModel> {
        if !(std >= 0.0) {
            return Err(Error::Parameter(format!("std must be >= 0, got {std}")));
        }
        let mut out = self.clone();
        let mut rng = seed::rng(seed::mix(seed, stream::RANDOMIZE, 0));
        for layer in out.layers_mut() {
            for w in layer.weight.data_mut().iter_mut().chain(layer.bias.data_mut()) {
                *w = std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(out)
    }

    pub fn bits_eq(&self, other: &MlpModel) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.bits_eq(b))
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
