//! Base attribution methods.
//!
//! Every explainer has a *signed* form (used by completeness and
//! conservation checks, and by pre-abs averaging) and the public form,
//! which takes absolute values as the final step.

mod archive;
mod gradient;
mod lrp;
mod occlusion;

pub use archive::{decode_attributions, encode_attribution, AttributionRecord, ATTRIBUTION_MAGIC};
pub use gradient::{gradshap_signed, intgrad_signed, saliency_signed};
pub use lrp::{lrp_gamma_relevances, lrp_gamma_signed, LRP_EPSILON};
pub use occlusion::occlusion_signed;

use crate::enhance::EnhancerConfig;
use crate::nn::MlpModel;
use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Saliency,
    IntegratedGradients,
    GradientShap,
    Occlusion,
    LrpGamma,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Saliency => "saliency",
            Method::IntegratedGradients => "intgrad",
            Method::GradientShap => "gradshap",
            Method::Occlusion => "occlusion",
            Method::LrpGamma => "lrp_gamma",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Method::Saliency,
            Method::IntegratedGradients,
            Method::GradientShap,
            Method::Occlusion,
            Method::LrpGamma,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

/// Which noise-averaging wrapper produced an attribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Enhancer {
    None,
    SmoothGrad,
    NoiseGrad,
    FusionGrad,
}

impl Enhancer {
    pub const ALL: [Enhancer; 4] = [Enhancer::None, Enhancer::SmoothGrad, Enhancer::NoiseGrad, Enhancer::FusionGrad];

    /// Short name; the unenhanced explainer is reported as `baseline`.
    pub fn name(self) -> &'static str {
        match self {
            Enhancer::None => "baseline",
            Enhancer::SmoothGrad => "sg",
            Enhancer::NoiseGrad => "ng",
            Enhancer::FusionGrad => "fg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "baseline" | "none" => Some(Enhancer::None),
            "sg" => Some(Enhancer::SmoothGrad),
            "ng" => Some(Enhancer::NoiseGrad),
            "fg" => Some(Enhancer::FusionGrad),
            _ => None,
        }
    }
}

/// A relevance map with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub values: Tensor,
    pub method: Method,
    pub enhancer: Enhancer,
    pub config: Option<EnhancerConfig>,
    pub seed: u64,
}

impl Attribution {
    pub fn new(values: Tensor, method: Method, seed: u64) -> Self {
        Self {
            values,
            method,
            enhancer: Enhancer::None,
            config: None,
            seed,
        }
    }
}

/// Explainer choice and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ExplainerSpec {
    Saliency,
    /// Midpoint Riemann sum with `steps` nodes; `baseline = None` means zeros.
    IntegratedGradients { steps: usize, baseline: Option<Tensor> },
    /// `sigma = None` means `0.1 · (max(x) − min(x))`.
    GradientShap { samples: usize, pool: Vec<Tensor>, sigma: Option<f64> },
    Occlusion { patch: usize, fill: f64 },
    LrpGamma { gamma: f64 },
}

pub const DEFAULT_IG_STEPS: usize = 128;
pub const DEFAULT_SHAP_SAMPLES: usize = 16;
pub const DEFAULT_SHAP_POOL: usize = 8;

impl ExplainerSpec {
    pub fn integrated_gradients() -> Self {
        ExplainerSpec::IntegratedGradients {
            steps: DEFAULT_IG_STEPS,
            baseline: None,
        }
    }

    pub fn occlusion() -> Self {
        ExplainerSpec::Occlusion { patch: 2, fill: 0.0 }
    }

    pub fn method(&self) -> Method {
        match self {
            ExplainerSpec::Saliency => Method::Saliency,
            ExplainerSpec::IntegratedGradients { .. } => Method::IntegratedGradients,
            ExplainerSpec::GradientShap { .. } => Method::GradientShap,
            ExplainerSpec::Occlusion { .. } => Method::Occlusion,
            ExplainerSpec::LrpGamma { .. } => Method::LrpGamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExplainerSpec::Saliency => Ok(()),
            ExplainerSpec::IntegratedGradients { steps, .. } if *steps == 0 => {
                Err(Error::Parameter("ig_steps must be >= 1".into()))
            }
            ExplainerSpec::GradientShap { samples, .. } if *samples == 0 => {
                Err(Error::Parameter("shap_samples must be >= 1".into()))
            }
            ExplainerSpec::GradientShap { pool, .. } if pool.is_empty() => {
                Err(Error::Parameter("gradshap baseline pool is empty".into()))
            }
            ExplainerSpec::GradientShap { sigma: Some(s), .. } if !(*s >= 0.0) => {
                Err(Error::Parameter(format!("shap sigma must be >= 0, got {s}")))
            }
            ExplainerSpec::Occlusion { patch, .. } if *patch == 0 => {
                Err(Error::Parameter("occlusion patch size must be >= 1".into()))
            }
            ExplainerSpec::LrpGamma { gamma } if !(*gamma >= 0.0) => {
                Err(Error::Parameter(format!("gamma must be >= 0, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    /// Whether repeated calls with different seeds can differ.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, ExplainerSpec::GradientShap { .. })
    }

    /// Attribution before the final absolute value.
    pub fn explain_signed(&self, model: &MlpModel, x: &Tensor, class_index: usize, seed: u64) -> Result<Tensor> {
        self.validate()?;
        match self {
            ExplainerSpec::Saliency => saliency_signed(model, x, class_index),
            ExplainerSpec::IntegratedGradients { steps, baseline } => {
                intgrad_signed(model, x, class_index, *steps, baseline.as_ref())
            }
            ExplainerSpec::GradientShap { samples, pool, sigma } => {
                gradshap_signed(model, x, class_index, *samples, pool, *sigma, seed)
            }
            ExplainerSpec::Occlusion { patch, fill } => occlusion_signed(model, x, class_index, *patch, *fill),
            ExplainerSpec::LrpGamma { gamma } => lrp_gamma_signed(model, x, class_index, *gamma),
        }
    }

    pub fn explain(&self, model: &MlpModel, x: &Tensor, class_index: usize, seed: u64) -> Result<Attribution> {
        let values = self.explain_signed(model, x, class_index, seed)?.abs();
        Ok(Attribution::new(values, self.method(), seed))
    }
}

pub fn saliency(model: &MlpModel, x: &Tensor, class_index: usize) -> Result<Attribution> {
    ExplainerSpec::Saliency.explain(model, x, class_index, 0)
}

pub fn intgrad(model: &MlpModel, x: &Tensor, class_index: usize, steps: usize, baseline: Option<&Tensor>) -> Result<Attribution> {
    ExplainerSpec::IntegratedGradients {
        steps,
        baseline: baseline.cloned(),
    }
    .explain(model, x, class_index, 0)
}

pub fn gradshap(
    model: &MlpModel,
    x: &Tensor,
    class_index: usize,
    samples: usize,
    pool: &[Tensor],
    sigma: Option<f64>,
    seed: u64,
) -> Result<Attribution> {
    ExplainerSpec::GradientShap {
        samples,
        pool: pool.to_vec(),
        sigma,
    }
    .explain(model, x, class_index, seed)
}

pub fn occlusion(model: &MlpModel, x: &Tensor, class_index: usize, patch: usize, fill: f64) -> Result<Attribution> {
    ExplainerSpec::Occlusion { patch, fill }.explain(model, x, class_index, 0)
}

pub fn lrp_gamma(model: &MlpModel, x: &Tensor, class_index: usize, gamma: f64) -> Result<Attribution> {
    ExplainerSpec::LrpGamma { gamma }.explain(model, x, class_index, 0)
}
