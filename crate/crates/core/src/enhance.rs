//! SmoothGrad, NoiseGrad and FusionGrad.
//!
//! All three average a base explainer over noise draws:
//!
//! * SG: `mean_j E(x + ξ_j, f(·, Ŵ))`, `ξ_j ~ N(0, σ_SG² I)`
//! * NG: `mean_i E(x, f(·, W_i))`, `W_i = Ŵ ⊙ η_i`, `η_i ~ N(1, σ_NG² I)`
//! * FG: `mean_i mean_j E(x + ξ_j, f(·, W_i))`
//!
//! Draw seeds: `ξ_j` comes from `mix(base_seed, INPUT_NOISE, j)` and `W_i`
//! from `mix(base_seed, WEIGHT_NOISE, i)`, so FG with one noise switched off
//! walks exactly the draws of SG or NG. The base explainer is always called
//! with `base_seed` as its own seed. Means are accumulated with
//! [`RunningMean`], which makes every degenerate-noise reduction bitwise.

use rand_distr::{Distribution, StandardNormal};

use crate::explain::{Attribution, Enhancer, ExplainerSpec};
use crate::nn::{MlpModel, NoiseScope};
use crate::seed::{self, stream};
use crate::tensor::RunningMean;
use crate::{Error, Result, Tensor};

/// Where the absolute value is taken relative to the average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Averaging {
    /// Average the explainer's absolute-valued output.
    #[default]
    PostAbs,
    /// Average signed attributions, then take the absolute value.
    PreAbs,
}

impl Averaging {
    pub fn name(self) -> &'static str {
        match self {
            Averaging::PostAbs => "post_abs",
            Averaging::PreAbs => "pre_abs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "post_abs" => Some(Averaging::PostAbs),
            "pre_abs" => Some(Averaging::PreAbs),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhancerConfig {
    /// Input-noise std in input units.
    pub sigma_sg: f64,
    /// Multiplicative weight-noise std.
    pub sigma_ng: f64,
    /// Number of noisy inputs `N`.
    pub n_inputs: usize,
    /// Number of perturbed models `M`.
    pub m_models: usize,
    pub base_seed: u64,
    pub noise_scope: NoiseScope,
    pub averaging: Averaging,
    /// FG only: reuse the same `N` input draws under every model. When
    /// false, model `i` gets its own draws from
    /// `mix(mix(base_seed, INPUT_NOISE_PER_MODEL, i), INPUT_NOISE, j)`.
    pub share_input_noise: bool,
}

impl Default for EnhancerConfig {
    fn default() -> Self {
        Self {
            sigma_sg: 0.0,
            sigma_ng: 0.0,
            n_inputs: 10,
            m_models: 10,
            base_seed: 0,
            noise_scope: NoiseScope::WeightsAndBiases,
            averaging: Averaging::PostAbs,
            share_input_noise: true,
        }
    }
}

impl EnhancerConfig {
    /// `M` in the 25–50 range that suffices for NoiseGrad on its own.
    pub fn noisegrad_high_quality(sigma_ng: f64, base_seed: u64) -> Self {
        Self {
            sigma_ng,
            m_models: 32,
            base_seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 || self.m_models == 0 {
            return Err(Error::Parameter("n_inputs and m_models must be >= 1".into()));
        }
        for (name, s) in [("sigma_sg", self.sigma_sg), ("sigma_ng", self.sigma_ng)] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// `x + ξ` with `ξ ~ N(0, σ² I)` drawn from `child_seed`.
pub fn noisy_input(x: &Tensor, sigma: f64, child_seed: u64) -> Tensor {
    if sigma == 0.0 {
        return x.clone();
    }
    let mut rng = seed::rng(child_seed);
    let mut out = x.clone();
    for v in out.data_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * z;
    }
    out
}

/// Lazily yields the `M` perturbed models of a configuration.
pub struct EnsembleStream<'a> {
    model: &'a MlpModel,
    sigma: f64,
    base_seed: u64,
    scope: NoiseScope,
    next: usize,
    len: usize,
}

impl Iterator for EnsembleStream<'_> {
    type Item = Result<MlpModel>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.len {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(perturbed_member(self.model, self.sigma, self.base_seed, self.scope, i))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.len - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for EnsembleStream<'_> {}

/// Member `i` of the ensemble: `perturb_weights` with `mix(base_seed, WEIGHT_NOISE, i)`.
pub fn perturbed_member(model: &MlpModel, sigma: f64, base_seed: u64, scope: NoiseScope, i: usize) -> Result<MlpModel> {
    model.perturb_weights(sigma, seed::mix(base_seed, stream::WEIGHT_NOISE, i as u64), scope)
}

pub fn ensemble_stream<'a>(model: &'a MlpModel, cfg: &EnhancerConfig) -> EnsembleStream<'a> {
    EnsembleStream {
        model,
        sigma: cfg.sigma_ng,
        base_seed: cfg.base_seed,
        scope: cfg.noise_scope,
        next: 0,
        len: cfg.m_models,
    }
}

/// All `M` members at once.
pub fn materialize_ensemble(model: &MlpModel, cfg: &EnhancerConfig) -> Result<Vec<MlpModel>> {
    ensemble_stream(model, cfg).collect()
}

fn term(explainer: &ExplainerSpec, model: &MlpModel, x: &Tensor, c: usize, cfg: &EnhancerConfig) -> Result<Tensor> {
    let signed = explainer.explain_signed(model, x, c, cfg.base_seed)?;
    Ok(match cfg.averaging {
        Averaging::PostAbs => signed.abs(),
        Averaging::PreAbs => signed,
    })
}

fn finish(mean: RunningMean, x: &Tensor, explainer: &ExplainerSpec, enhancer: Enhancer, cfg: &EnhancerConfig) -> Result<Attribution> {
    let values = Tensor::new(x.shape().to_vec(), mean.finish())?.abs();
    Ok(Attribution {
        values,
        method: explainer.method(),
        enhancer,
        config: Some(*cfg),
        seed: cfg.base_seed,
    })
}

fn input_seed(cfg: &EnhancerConfig, model_index: Option<usize>, j: usize) -> u64 {
    match model_index {
        Some(i) if !cfg.share_input_noise => seed::mix(
            seed::mix(cfg.base_seed, stream::INPUT_NOISE_PER_MODEL, i as u64),
            stream::INPUT_NOISE,
            j as u64,
        ),
        _ => seed::mix(cfg.base_seed, stream::INPUT_NOISE, j as u64),
    }
}

fn smooth_mean(
    model: &MlpModel,
    x: &Tensor,
    c: usize,
    explainer: &ExplainerSpec,
    cfg: &EnhancerConfig,
    model_index: Option<usize>,
) -> Result<Vec<f64>> {
    let mut mean = RunningMean::new(x.len());
    for j in 0..cfg.n_inputs {
        let xi = noisy_input(x, cfg.sigma_sg, input_seed(cfg, model_index, j));
        mean.push(term(explainer, model, &xi, c, cfg)?.data());
    }
    Ok(mean.finish())
}

pub fn smoothgrad(model: &MlpModel, x: &Tensor, c: usize, explainer: &ExplainerSpec, cfg: &EnhancerConfig) -> Result<Attribution> {
    cfg.validate()?;
    let mut mean = RunningMean::new(x.len());
    mean.push(&smooth_mean(model, x, c, explainer, cfg, None)?);
    finish(mean, x, explainer, Enhancer::SmoothGrad, cfg)
}

pub fn noisegrad(model: &MlpModel, x: &Tensor, c: usize, explainer: &ExplainerSpec, cfg: &EnhancerConfig) -> Result<Attribution> {
    cfg.validate()?;
    let mut mean = RunningMean::new(x.len());
    for member in ensemble_stream(model, cfg) {
        mean.push(term(explainer, &member?, x, c, cfg)?.data());
    }
    finish(mean, x, explainer, Enhancer::NoiseGrad, cfg)
}

/// Models in the outer loop, input draws in the inner loop; each perturbed
/// model is built once and reused for all of its `N` inputs.
pub fn fusiongrad(model: &MlpModel, x: &Tensor, c: usize, explainer: &ExplainerSpec, cfg: &EnhancerConfig) -> Result<Attribution> {
    cfg.validate()?;
    let mut mean = RunningMean::new(x.len());
    for (i, member) in ensemble_stream(model, cfg).enumerate() {
        mean.push(&smooth_mean(&member?, x, c, explainer, cfg, Some(i))?);
    }
    finish(mean, x, explainer, Enhancer::FusionGrad, cfg)
}

/// Dispatches on `enhancer`; `Enhancer::None` runs the base explainer with
/// `cfg.base_seed`.
pub fn enhance(
    enhancer: Enhancer,
    model: &MlpModel,
    x: &Tensor,
    c: usize,
    explainer: &ExplainerSpec,
    cfg: &EnhancerConfig,
) -> Result<Attribution> {
    match enhancer {
        Enhancer::None => explainer.explain(model, x, c, cfg.base_seed),
        Enhancer::SmoothGrad => smoothgrad(model, x, c, explainer, cfg),
        Enhancer::NoiseGrad => noisegrad(model, x, c, explainer, cfg),
        Enhancer::FusionGrad => fusiongrad(model, x, c, explainer, cfg),
    }
}
