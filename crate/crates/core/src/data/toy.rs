use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::seed::{self, stream};
use crate::{Error, Result, Tensor};

/// Four-component 2-D Gaussian mixture; the first two components are
/// class 0 and the last two class 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyGaussSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub means: [[f64; 2]; 4],
    /// Diagonal covariance entry shared by all components.
    pub variance: f64,
}

impl Default for ToyGaussSpec {
    fn default() -> Self {
        Self {
            n_train: 960,
            n_test: 64,
            means: [[8.0, 8.0], [1.0, 8.0], [8.0, 1.0], [1.0, 1.0]],
            variance: 0.5,
        }
    }
}

impl ToyGaussSpec {
    pub fn n_points(&self) -> usize {
        self.n_train + self.n_test
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return Err(Error::Parameter(format!("variance must be > 0, got {}", self.variance)));
        }
        Ok(())
    }
}

/// Draws `n_points` samples, point `i` from component `i % 4`, then splits
/// them at random into train and test.
pub fn make_toy_gauss(spec: &ToyGaussSpec, seed: u64) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let n = spec.n_points();
    let std = spec.variance.sqrt();
    let mut rng = seed::rng(seed::mix(seed, stream::DATA, 0));
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 4;
        let x = spec.means[c][0] + std * rng.sample::<f64, _>(StandardNormal);
        let y = spec.means[c][1] + std * rng.sample::<f64, _>(StandardNormal);
        points.push((Tensor::from_vec(vec![x, y]), usize::from(c >= 2)));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::mix(seed, stream::SPLIT, 0)));

    let build = |name: &str, idx: &[usize]| {
        Dataset::new(
            name,
            vec![2],
            2,
            idx.iter().map(|&i| points[i].0.clone()).collect(),
            idx.iter().map(|&i| points[i].1).collect(),
            None,
        )
    };
    let (test_idx, train_idx) = order.split_at(spec.n_test);
    Ok((build("toy-gauss-train", train_idx)?, build("toy-gauss-test", test_idx)?))
}
