#![allow(dead_code)]

use gnlab_core::nn::{Activation, Layer, MlpModel};
use gnlab_core::seed;
use gnlab_core::Tensor;
use rand::Rng;

/// Uniform weights in [-1, 1]; biases in [-0.5, 0.5] or zero.
pub fn random_model(dims: &[usize], seed_value: u64, bias: bool) -> MlpModel {
    let mut rng = seed::rng(seed_value);
    let n = dims.len() - 1;
    let layers = (0..n)
        .map(|l| {
            let (i, o) = (dims[l], dims[l + 1]);
            let w = (0..i * o).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = (0..o).map(|_| if bias { rng.random_range(-0.5..0.5) } else { 0.0 }).collect();
            let act = if l + 1 == n { Activation::Identity } else { Activation::Relu };
            Layer::new(Tensor::new(vec![o, i], w).unwrap(), Tensor::from_vec(b), act).unwrap()
        })
        .collect();
    MlpModel::new(layers).unwrap()
}

pub fn random_input(dim: usize, seed_value: u64) -> Tensor {
    let mut rng = seed::rng(seed_value);
    Tensor::from_vec((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Plain loops over the stored weights; returns every pre-activation vector
/// and the logits.
pub fn naive_forward(model: &MlpModel, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = x.to_vec();
    let mut pre = Vec::new();
    for layer in model.layers() {
        let (o, i) = (layer.out_dim(), layer.in_dim());
        let w = layer.weight.data();
        let z: Vec<f64> = (0..o)
            .map(|k| layer.bias.data()[k] + (0..i).map(|j| w[k * i + j] * a[j]).sum::<f64>())
            .collect();
        a = z.iter().map(|&v| layer.activation.apply(v)).collect();
        pre.push(z);
    }
    (pre, a)
}

pub fn naive_logit(model: &MlpModel, x: &[f64], c: usize) -> f64 {
    naive_forward(model, x).1[c]
}

pub fn fd_grad(model: &MlpModel, x: &[f64], c: usize, h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[j] += h;
            m[j] -= h;
            (naive_logit(model, &p, c) - naive_logit(model, &m, c)) / (2.0 * h)
        })
        .collect()
}

/// Smallest |pre-activation| over the hidden layers.
pub fn kink_distance(model: &MlpModel, x: &[f64]) -> f64 {
    let (pre, _) = naive_forward(model, x);
    let hidden = pre.len() - 1;
    pre[..hidden].iter().flatten().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
}

/// Backprop through `naive_forward`, written out with explicit loops.
pub fn naive_grad(model: &MlpModel, x: &[f64], c: usize) -> Vec<f64> {
    let (pre, out) = naive_forward(model, x);
    let mut g = vec![0.0; out.len()];
    g[c] = 1.0;
    for (l, layer) in model.layers().iter().enumerate().rev() {
        let (o, i) = (layer.out_dim(), layer.in_dim());
        let w = layer.weight.data();
        let dz: Vec<f64> = (0..o).map(|k| g[k] * layer.activation.derivative(pre[l][k])).collect();
        g = (0..i).map(|j| (0..o).map(|k| w[k * i + j] * dz[k]).sum()).collect();
    }
    g
}

/// He-normal weights from `MlpModel::init` with biases redrawn from
/// `N(0, bias_std²)`, so ReLU kinks can fall anywhere along a path.
pub fn he_model(dims: &[usize], seed_value: u64, bias_std: f64) -> MlpModel {
    use rand_distr::{Distribution, StandardNormal};
    let base = MlpModel::init(dims, seed_value).unwrap();
    let mut rng = seed::rng(seed::mix(seed_value, 1000, 0));
    let layers = base
        .layers()
        .iter()
        .map(|l| {
            let b = (0..l.out_dim())
                .map(|_| bias_std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            Layer::new(l.weight.clone(), Tensor::from_vec(b), l.activation).unwrap()
        })
        .collect();
    MlpModel::new(layers).unwrap()
}

/// The benchmark setup at default scale: 2048/512 glyph images, a 64-32
/// ReLU MLP trained for 60 epochs.
pub fn glyph_model(seed_value: u64) -> (MlpModel, gnlab_core::data::Dataset, gnlab_core::data::Dataset) {
    use gnlab_core::data::{make_masked_glyph, GlyphSpec};
    use gnlab_core::nn::{train, OptimizerConfig};
    let spec = |n| GlyphSpec { n, noise_std: 0.2, ..Default::default() };
    let tr = make_masked_glyph(&spec(2048), seed::mix(seed_value, 1, 0)).unwrap();
    let te = make_masked_glyph(&spec(512), seed::mix(seed_value, 2, 0)).unwrap();
    let mut model = MlpModel::init(&[tr.input_dim(), 64, 32, tr.num_classes()], seed::mix(seed_value, 3, 0)).unwrap();
    let opt = OptimizerConfig {
        epochs: 60,
        batch_size: 32,
        learning_rate: 0.02,
        momentum: 0.9,
        weight_decay: 0.005,
        seed: seed::mix(seed_value, 4, 0),
    };
    train(&mut model, &tr, None, &opt).unwrap();
    (model, tr, te)
}
