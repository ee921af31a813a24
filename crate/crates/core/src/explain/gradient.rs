use rand::Rng;
use rand_distr::StandardNormal;

use crate::nn::MlpModel;
use crate::seed::{self, stream};
use crate::tensor::RunningMean;
use crate::{Error, Result, Tensor};

/// Raw input gradient `∂f_c/∂x`.
pub fn saliency_signed(model: &MlpModel, x: &Tensor, class_index: usize) -> Result<Tensor> {
    model.grad_input(x, class_index)
}

/// `(x − x̄) ⊙ mean_t ∇f_c(x̄ + α_t (x − x̄))` with midpoint nodes
/// `α_t = (t + 0.5) / steps`.
pub fn intgrad_signed(
    model: &MlpModel,
    x: &Tensor,
    class_index: usize,
    steps: usize,
    baseline: Option<&Tensor>,
) -> Result<Tensor> {
    if steps == 0 {
        return Err(Error::Parameter("ig_steps must be >= 1".into()));
    }
    let zeros;
    let base = match baseline {
        Some(b) => b,
        None => {
            zeros = Tensor::zeros(x.shape());
            &zeros
        }
    };
    if base.shape() != x.shape() {
        return Err(Error::dims(x.shape(), base.shape()));
    }
    let diff = x.zip_map(base, |a, b| a - b)?;
    let mut mean = RunningMean::new(x.len());
    for t in 0..steps {
        let alpha = (t as f64 + 0.5) / steps as f64;
        let point = base.zip_map(&diff, |b, d| b + alpha * d)?;
        mean.push(model.grad_input(&point, class_index)?.data());
    }
    let avg = Tensor::new(x.shape().to_vec(), mean.finish())?;
    diff.zip_map(&avg, |d, g| d * g)
}

/// Expected gradient over random baselines and noisy interpolation points.
///
/// Draw `j` uses a generator seeded with `mix(seed, GRADSHAP, j)` and takes,
/// in order: the pool index, `u ~ U(0, 1)`, then one standard normal per
/// feature for `ε_j`.
pub fn gradshap_signed(
    model: &MlpModel,
    x: &Tensor,
    class_index: usize,
    samples: usize,
    pool: &[Tensor],
    sigma: Option<f64>,
    seed: u64,
) -> Result<Tensor> {
    if pool.is_empty() {
        return Err(Error::Parameter("gradshap baseline pool is empty".into()));
    }
    if samples == 0 {
        return Err(Error::Parameter("shap_samples must be >= 1".into()));
    }
    if let Some(b) = pool.iter().find(|b| b.len() != x.len()) {
        return Err(Error::dims(x.shape(), b.shape()));
    }
    let sigma = sigma.unwrap_or_else(|| 0.1 * (x.max() - x.min()));
    let mut mean = RunningMean::new(x.len());
    let mut point = vec![0.0; x.len()];
    let mut term = vec![0.0; x.len()];
    for j in 0..samples {
        let mut rng = seed::rng(seed::mix(seed, stream::GRADSHAP, j as u64));
        let base = pool[rng.random_range(0..pool.len())].data();
        let u: f64 = rng.random();
        for ((p, &xi), &bi) in point.iter_mut().zip(x.data()).zip(base) {
            let eps = sigma * rng.sample::<f64, _>(StandardNormal);
            *p = bi + u * (xi - bi) + eps;
        }
        let g = model.grad_input(&Tensor::new(x.shape().to_vec(), point.clone())?, class_index)?;
        for (((t, &xi), &bi), &gi) in term.iter_mut().zip(x.data()).zip(base).zip(g.data()) {
            *t = (xi - bi) * gi;
        }
        mean.push(&term);
    }
    Tensor::new(x.shape().to_vec(), mean.finish())
}
