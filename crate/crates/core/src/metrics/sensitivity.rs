use rand::Rng;

use crate::seed::{self, stream};
use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityConfig {
    pub radius: f64,
    pub samples: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self { radius: 0.2, samples: 10 }
    }
}

/// Largest Frobenius distance between the explanation at `x` and at `n`
/// points drawn uniformly from the L∞ ball of radius `r`.
///
/// Draw `j` uses `mix(seed, SENSITIVITY, j)`, one uniform per feature.
pub fn max_sensitivity(
    explain_fn: impl Fn(&Tensor) -> Result<Tensor>,
    x: &Tensor,
    cfg: &SensitivityConfig,
    seed: u64,
) -> Result<f64> {
    if !(cfg.radius > 0.0) || !cfg.radius.is_finite() {
        return Err(Error::Parameter(format!("radius must be > 0, got {}", cfg.radius)));
    }
    if cfg.samples == 0 {
        return Err(Error::Parameter("sensitivity samples must be >= 1".into()));
    }
    let reference = explain_fn(x)?;
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for j in 0..cfg.samples {
        let mut rng = seed::rng(seed::mix(seed, stream::SENSITIVITY, j as u64));
        for (p, &v) in probe.data_mut().iter_mut().zip(x.data()) {
            *p = v + rng.random_range(-cfg.radius..=cfg.radius);
        }
        let e = explain_fn(&probe)?;
        if e.len() != reference.len() {
            return Err(Error::dims(reference.shape(), e.shape()));
        }
        let dist = e
            .data()
            .iter()
            .zip(reference.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dist);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_explanation_has_zero_sensitivity() {
        let x = Tensor::from_vec(vec![0.5; 9]);
        let s = max_sensitivity(|_| Ok(Tensor::filled(&[9], 2.0)), &x, &SensitivityConfig::default(), 3).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn identity_is_bounded_by_ball() {
        let x = Tensor::from_vec(vec![0.1; 16]);
        let cfg = SensitivityConfig::default();
        let s = max_sensitivity(|t| Ok(t.clone()), &x, &cfg, 4).unwrap();
        assert!(s > 0.0 && s <= cfg.radius * 4.0, "{s}");
    }

    #[test]
    fn matches_loop_oracle() {
        let x = Tensor::from_vec(vec![0.3, -0.2, 0.9]);
        let f = |t: &Tensor| Ok(t.map(|v| v * v));
        let cfg = SensitivityConfig { radius: 0.2, samples: 7 };
        let got = max_sensitivity(f, &x, &cfg, 8).unwrap();

        let mut want: f64 = 0.0;
        for j in 0..7u64 {
            let mut rng = seed::rng(seed::mix(8, stream::SENSITIVITY, j));
            let mut d2 = 0.0;
            for &v in x.data() {
                let p = v + rng.random_range(-0.2..=0.2);
                d2 += (p * p - v * v).powi(2);
            }
            want = want.max(d2.sqrt());
        }
        assert_eq!(got.to_bits(), want.to_bits());
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = Tensor::from_vec(vec![0.0]);
        let f = |t: &Tensor| Ok(t.clone());
        assert!(max_sensitivity(f, &x, &SensitivityConfig { radius: 0.0, samples: 1 }, 0).is_err());
        assert!(max_sensitivity(f, &x, &SensitivityConfig { radius: 0.1, samples: 0 }, 0).is_err());
    }
}
