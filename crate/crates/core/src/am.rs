//! Activation maximization under an ensemble of perturbed models.
//!
//! Projected gradient ascent on
//! `J(x) = mean_i g(x, W_i) − λ ‖x‖²`, clamped to a box after every step.

use std::borrow::Cow;

use rand_distr::{Distribution, StandardNormal};

use crate::enhance::perturbed_member;
use crate::nn::{MlpModel, NoiseScope};
use crate::seed::{self, stream};
use crate::tensor::{running_mean, RunningMean};
use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmTarget {
    ClassLogit(usize),
    /// Post-activation output `unit` of layer `layer`.
    Neuron { layer: usize, unit: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmConfig {
    pub target: AmTarget,
    pub steps: usize,
    pub step_size: f64,
    pub box_lo: f64,
    pub box_hi: f64,
    pub l2_penalty: f64,
    pub jitter_std: f64,
    pub m_models: usize,
    pub sigma_ng: f64,
    pub seed: u64,
    pub noise_scope: NoiseScope,
    /// Redraw the ensemble at every step instead of once at the start.
    pub resample_per_step: bool,
}

impl Default for AmConfig {
    fn default() -> Self {
        Self {
            target: AmTarget::ClassLogit(0),
            steps: 512,
            step_size: 0.05,
            box_lo: 0.0,
            box_hi: 1.0,
            l2_penalty: 1e-3,
            jitter_std: 0.01,
            m_models: 10,
            sigma_ng: 0.0,
            seed: 0,
            noise_scope: NoiseScope::WeightsAndBiases,
            resample_per_step: false,
        }
    }
}

impl AmConfig {
    pub fn validate(&self, model: &MlpModel) -> Result<()> {
        if self.steps == 0 || self.m_models == 0 {
            return Err(Error::Parameter("am steps and m_models must be >= 1".into()));
        }
        if !(self.box_lo < self.box_hi) {
            return Err(Error::Parameter(format!("empty box [{}, {}]", self.box_lo, self.box_hi)));
        }
        for (name, v) in [
            ("step_size", self.step_size),
            ("l2_penalty", self.l2_penalty),
            ("jitter_std", self.jitter_std),
            ("sigma_ng", self.sigma_ng),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        match self.target {
            AmTarget::ClassLogit(c) if c >= model.output_dim() => Err(Error::Index {
                index: c,
                len: model.output_dim(),
            }),
            AmTarget::Neuron { layer, .. } if layer >= model.layers().len() => Err(Error::Index {
                index: layer,
                len: model.layers().len(),
            }),
            AmTarget::Neuron { layer, unit } if unit >= model.layers()[layer].out_dim() => Err(Error::Index {
                index: unit,
                len: model.layers()[layer].out_dim(),
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmResult {
    pub x_star: Tensor,
    /// `J` after each step.
    pub objective_trace: Vec<f64>,
}

fn target_layer(model: &MlpModel, target: AmTarget) -> (usize, usize) {
    match target {
        AmTarget::ClassLogit(c) => (model.layers().len() - 1, c),
        AmTarget::Neuron { layer, unit } => (layer, unit),
    }
}

/// `g(x, W)` and `∇_x g`.
pub fn target_value_grad(model: &MlpModel, x: &Tensor, target: AmTarget) -> Result<(f64, Tensor)> {
    let (layer, unit) = target_layer(model, target);
    let tape = model.forward_tape(x)?;
    let value = tape.layer_output(layer)[unit];
    let mut seed = vec![0.0; model.layers()[layer].out_dim()];
    seed[unit] = 1.0;
    let g = tape.backward_from(model, layer, &seed);
    Ok((value, Tensor::new(x.shape().to_vec(), g)?))
}

/// `mean_i g(x, W_i) − λ ‖x‖²`.
pub fn ensemble_objective(models: &[MlpModel], x: &Tensor, target: AmTarget, l2_penalty: f64) -> Result<f64> {
    let values = models
        .iter()
        .map(|m| target_value_grad(m, x, target).map(|(v, _)| v))
        .collect::<Result<Vec<_>>>()?;
    Ok(running_mean(values) - l2_penalty * x.data().iter().map(|v| v * v).sum::<f64>())
}

fn draw_models(model: &MlpModel, cfg: &AmConfig, base: u64) -> Result<Vec<MlpModel>> {
    (0..cfg.m_models)
        .map(|i| perturbed_member(model, cfg.sigma_ng, base, cfg.noise_scope, i))
        .collect()
}

/// Ensemble activation maximization. Models `W_i` come from
/// `mix(seed, WEIGHT_NOISE, i)`; with `resample_per_step`, step `t` uses base
/// seed `mix(seed, AM_RESAMPLE, t)` instead. Jitter at step `t` is drawn from
/// `mix(seed, JITTER, t)`.
pub fn activation_maximize(model: &MlpModel, cfg: &AmConfig) -> Result<AmResult> {
    cfg.validate(model)?;
    let fixed = if cfg.resample_per_step {
        None
    } else {
        Some(draw_models(model, cfg, cfg.seed)?)
    };
    ascend(model.input_dim(), cfg, |t| match &fixed {
        Some(models) => Ok(Cow::Borrowed(models.as_slice())),
        None => draw_models(model, cfg, seed::mix(cfg.seed, stream::AM_RESAMPLE, t as u64)).map(Cow::Owned),
    })
}

/// Single-model activation maximization with the same schedule.
pub fn plain_activation_maximize(model: &MlpModel, cfg: &AmConfig) -> Result<AmResult> {
    cfg.validate(model)?;
    let models = std::slice::from_ref(model);
    ascend(model.input_dim(), cfg, |_| Ok(Cow::Borrowed(models)))
}

fn ascend<'m>(
    dim: usize,
    cfg: &AmConfig,
    models_at: impl Fn(usize) -> Result<Cow<'m, [MlpModel]>>,
) -> Result<AmResult> {
    let mid = 0.5 * (cfg.box_lo + cfg.box_hi);
    let mut x = Tensor::filled(&[dim], mid);
    let mut trace = Vec::with_capacity(cfg.steps);
    for t in 0..cfg.steps {
        let models = models_at(t)?;
        let mut grad = RunningMean::new(dim);
        for m in models.iter() {
            grad.push(target_value_grad(m, &x, cfg.target)?.1.data());
        }
        let grad = grad.finish();
        let mut rng = (cfg.jitter_std > 0.0).then(|| seed::rng(seed::mix(cfg.seed, stream::JITTER, t as u64)));
        for (xi, gi) in x.data_mut().iter_mut().zip(&grad) {
            *xi += cfg.step_size * (gi - 2.0 * cfg.l2_penalty * *xi);
            if let Some(rng) = rng.as_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *xi += cfg.jitter_std * z;
            }
            *xi = xi.clamp(cfg.box_lo, cfg.box_hi);
        }
        let j = ensemble_objective(&models, &x, cfg.target, cfg.l2_penalty)?;
        if !j.is_finite() {
            return Err(Error::Optimization { step: t });
        }
        trace.push(j);
    }
    Ok(AmResult {
        x_star: x,
        objective_trace: trace,
    })
}

/// Centered moving average with a window of `w` (shrunk at the edges).
pub fn smooth(trace: &[f64], w: usize) -> Vec<f64> {
    let h = w / 2;
    (0..trace.len())
        .map(|i| {
            let lo = i.saturating_sub(h);
            let hi = (i + h + 1).min(trace.len());
            trace[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Layer};

    fn linear(w: Vec<f64>) -> MlpModel {
        let d = w.len();
        let layer = Layer::new(Tensor::new(vec![1, d], w).unwrap(), Tensor::zeros(&[1]), Activation::Identity).unwrap();
        MlpModel::new(vec![layer]).unwrap()
    }

    #[test]
    fn single_unperturbed_model_reduces_to_plain() {
        let m = MlpModel::init(&[6, 8, 3], 2).unwrap();
        let cfg = AmConfig {
            target: AmTarget::ClassLogit(1),
            steps: 40,
            m_models: 1,
            sigma_ng: 0.0,
            seed: 9,
            ..Default::default()
        };
        let a = activation_maximize(&m, &cfg).unwrap();
        let b = plain_activation_maximize(&m, &cfg).unwrap();
        assert!(a.x_star.bits_eq(&b.x_star));
        let bits = |t: &[f64]| t.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.objective_trace), bits(&b.objective_trace));
    }

    #[test]
    fn linear_objective_reaches_corner() {
        let w = vec![0.3, -0.7, 1.2, -0.15];
        let cfg = AmConfig {
            box_lo: -1.0,
            box_hi: 1.0,
            l2_penalty: 0.0,
            jitter_std: 0.0,
            m_models: 1,
            ..Default::default()
        };
        let r = activation_maximize(&linear(w.clone()), &cfg).unwrap();
        let want: Vec<f64> = w.iter().map(|v| v.signum()).collect();
        assert_eq!(r.x_star.data(), want.as_slice());
    }

    #[test]
    fn interior_optimum_is_stationary() {
        let w = vec![0.4, -0.2, 0.1];
        let lambda = 0.5;
        let cfg = AmConfig {
            box_lo: -10.0,
            box_hi: 10.0,
            l2_penalty: lambda,
            jitter_std: 0.0,
            m_models: 1,
            ..Default::default()
        };
        let m = linear(w.clone());
        let r = activation_maximize(&m, &cfg).unwrap();
        let (_, g) = target_value_grad(&m, &r.x_star, cfg.target).unwrap();
        let norm: f64 = g
            .data()
            .iter()
            .zip(r.x_star.data())
            .map(|(gi, xi)| (gi - 2.0 * lambda * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(norm < cfg.step_size * 10.0, "{norm}");
    }

    #[test]
    fn ensemble_objective_is_mean_of_members() {
        let m = MlpModel::init(&[4, 5, 2], 3).unwrap();
        let members: Vec<MlpModel> = (0..5)
            .map(|i| perturbed_member(&m, 0.3, 7, NoiseScope::WeightsAndBiases, i).unwrap())
            .collect();
        let x = Tensor::from_vec(vec![0.2, 0.9, -0.4, 0.5]);
        let target = AmTarget::Neuron { layer: 0, unit: 2 };
        let joint = ensemble_objective(&members, &x, target, 0.1).unwrap();
        let separate: f64 = members
            .iter()
            .map(|mm| ensemble_objective(std::slice::from_ref(mm), &x, target, 0.1).unwrap())
            .sum::<f64>()
            / 5.0;
        assert!((joint - separate).abs() < 1e-12);
    }

    #[test]
    fn neuron_gradient_matches_finite_differences() {
        let m = MlpModel::init(&[3, 6, 4, 2], 5).unwrap();
        let x = Tensor::from_vec(vec![0.3, -0.8, 0.6]);
        let target = AmTarget::Neuron { layer: 1, unit: 1 };
        let (_, g) = target_value_grad(&m, &x, target).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut a = x.clone();
            let mut b = x.clone();
            a.data_mut()[i] += h;
            b.data_mut()[i] -= h;
            let fd = (target_value_grad(&m, &a, target).unwrap().0 - target_value_grad(&m, &b, target).unwrap().0) / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn resampling_is_deterministic() {
        let m = MlpModel::init(&[4, 5, 2], 3).unwrap();
        let cfg = AmConfig {
            steps: 10,
            m_models: 3,
            sigma_ng: 0.2,
            resample_per_step: true,
            ..Default::default()
        };
        let a = activation_maximize(&m, &cfg).unwrap();
        let b = activation_maximize(&m, &cfg).unwrap();
        assert!(a.x_star.bits_eq(&b.x_star));
    }

    #[test]
    fn validation() {
        let m = MlpModel::init(&[4, 5, 2], 3).unwrap();
        let bad = [
            AmConfig { steps: 0, ..Default::default() },
            AmConfig { box_lo: 1.0, box_hi: 1.0, ..Default::default() },
            AmConfig { target: AmTarget::ClassLogit(2), ..Default::default() },
            AmConfig { target: AmTarget::Neuron { layer: 0, unit: 5 }, ..Default::default() },
        ];
        for cfg in bad {
            assert!(activation_maximize(&m, &cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn smoothing_window() {
        assert_eq!(smooth(&[0.0, 3.0, 6.0], 3), vec![1.5, 3.0, 4.5]);
    }
}
