use rand::seq::index;

use super::stats::pearson;
use crate::nn::MlpModel;
use crate::seed::{self, stream};
use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaithfulnessConfig {
    pub subset_size: usize,
    pub iterations: usize,
    /// Replacement value for occluded features (black for images in `[0, 1]`).
    pub baseline_value: f64,
}

impl Default for FaithfulnessConfig {
    fn default() -> Self {
        Self {
            subset_size: 32,
            iterations: 100,
            baseline_value: 0.0,
        }
    }
}

impl FaithfulnessConfig {
    pub fn validate(&self, input_dim: usize) -> Result<()> {
        if self.subset_size == 0 || self.subset_size > input_dim {
            return Err(Error::Parameter(format!(
                "subset_size must lie in 1..={input_dim}, got {}",
                self.subset_size
            )));
        }
        if self.iterations < 2 {
            return Err(Error::Parameter("faithfulness needs at least 2 iterations".into()));
        }
        Ok(())
    }
}

/// Pearson correlation between attribution mass on random subsets and the
/// logit drop from setting those subsets to the baseline value.
///
/// Iteration `t` draws its subset (without replacement) from
/// `mix(seed, FAITHFULNESS, t)`.
pub fn faithfulness_corr(
    model: &MlpModel,
    x: &Tensor,
    class_index: usize,
    attr: &Tensor,
    cfg: &FaithfulnessConfig,
    seed: u64,
) -> Result<f64> {
    cfg.validate(x.len())?;
    if attr.len() != x.len() {
        return Err(Error::dims(x.shape(), attr.shape()));
    }
    let reference = model.logit(x, class_index)?;
    let mut sums = Vec::with_capacity(cfg.iterations);
    let mut drops = Vec::with_capacity(cfg.iterations);
    let mut probe = x.clone();
    for t in 0..cfg.iterations {
        let mut rng = seed::rng(seed::mix(seed, stream::FAITHFULNESS, t as u64));
        let subset = index::sample(&mut rng, x.len(), cfg.subset_size);
        let mut mass = 0.0;
        for i in subset.iter() {
            mass += attr.data()[i];
            probe.data_mut()[i] = cfg.baseline_value;
        }
        drops.push(reference - model.logit(&probe, class_index)?);
        sums.push(mass);
        for i in subset.iter() {
            probe.data_mut()[i] = x.data()[i];
        }
    }
    pearson(&sums, &drops).map_err(|e| match e {
        Error::UndefinedCorrelation("first series") => Error::UndefinedCorrelation("attribution subset sums"),
        Error::UndefinedCorrelation(_) => Error::UndefinedCorrelation("logit drops"),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Layer};
    use rand::Rng;

    fn linear(w: Vec<f64>) -> MlpModel {
        let d = w.len();
        let layer = Layer::new(Tensor::new(vec![1, d], w).unwrap(), Tensor::zeros(&[1]), Activation::Identity).unwrap();
        MlpModel::new(vec![layer]).unwrap()
    }

    fn setup() -> (MlpModel, Tensor, Tensor) {
        let mut rng = seed::rng(5);
        let w: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..1.0)).collect();
        let attr: Vec<f64> = w.iter().zip(&x).map(|(a, b)| a * b).collect();
        (linear(w), Tensor::from_vec(x), Tensor::from_vec(attr))
    }

    #[test]
    fn linear_model_with_exact_contributions() {
        let (m, x, attr) = setup();
        let cfg = FaithfulnessConfig::default();
        let c = faithfulness_corr(&m, &x, 0, &attr, &cfg, 1).unwrap();
        assert!((c - 1.0).abs() < 1e-12, "{c}");
        let neg = attr.map(|v| -v);
        let c = faithfulness_corr(&m, &x, 0, &neg, &cfg, 1).unwrap();
        assert!((c + 1.0).abs() < 1e-12, "{c}");
    }

    #[test]
    fn positive_affine_invariance() {
        let (m, x, attr) = setup();
        let cfg = FaithfulnessConfig::default();
        let noisy = attr.map(|v| v + (v * 37.0).sin() * 0.1);
        let a = faithfulness_corr(&m, &x, 0, &noisy, &cfg, 2).unwrap();
        let b = faithfulness_corr(&m, &x, 0, &noisy.map(|v| 3.0 * v + 2.0), &cfg, 2).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn random_attribution_is_uncorrelated_on_average() {
        let (m, x, _) = setup();
        let cfg = FaithfulnessConfig::default();
        let mut rng = seed::rng(11);
        let mut total = 0.0;
        for r in 0..100 {
            let attr = Tensor::from_vec((0..64).map(|_| rng.random::<f64>()).collect());
            total += faithfulness_corr(&m, &x, 0, &attr, &cfg, r).unwrap();
        }
        assert!((total / 100.0).abs() < 0.1);
    }

    #[test]
    fn constant_mass_is_undefined() {
        let (m, x, _) = setup();
        let cfg = FaithfulnessConfig::default();
        let flat = Tensor::filled(&[64], 1.0);
        assert!(matches!(
            faithfulness_corr(&m, &x, 0, &flat, &cfg, 0),
            Err(Error::UndefinedCorrelation(_))
        ));
        let bad = FaithfulnessConfig { subset_size: 65, ..cfg };
        assert!(faithfulness_corr(&m, &x, 0, &flat, &bad, 0).is_err());
    }
}
