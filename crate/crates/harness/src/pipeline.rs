//! Shared steps: datasets, the trained model, noise levels and the
//! per-enhancer configurations derived from them.

use std::path::PathBuf;

use gnlab_core::calibration::{calibrate, sigma_sg_rule_dataset, CalibrationResult, EnsembleProbe};
use gnlab_core::data::{make_masked_glyph, make_toy_gauss, Dataset, GlyphSpec, ToyGaussSpec};
use gnlab_core::enhance::EnhancerConfig;
use gnlab_core::explain::{Enhancer, ExplainerSpec};
use gnlab_core::nn::{load_checkpoint, save_checkpoint, train, MlpModel, OptimizerConfig, TrainedReport};
use gnlab_core::seed::mix;
use gnlab_core::Error;

use crate::config::{DatasetKind, ExperimentConfig, FgMode};
use crate::error::{HarnessError, HarnessResult};
use crate::output::OutDir;

/// Harness seed streams, mixed with `run.seed`. Kept clear of the numbers
/// the core library uses internally.
pub mod purpose {
    pub const TRAIN_DATA: u64 = 101;
    pub const TEST_DATA: u64 = 102;
    pub const INIT: u64 = 103;
    pub const SHUFFLE: u64 = 104;
    pub const CALIBRATION: u64 = 105;
    pub const EXPLAIN: u64 = 106;
    pub const FAITHFULNESS: u64 = 107;
    pub const SENSITIVITY: u64 = 108;
    pub const SANITY: u64 = 109;
    pub const AM: u64 = 110;
    pub const TOY: u64 = 111;
}

pub fn derive(seed: u64, purpose: u64) -> u64 {
    mix(seed, purpose, 0)
}

/// Enhancer base seed for sample `i`, shared by all enhancers.
pub fn sample_seed(seed: u64, i: usize) -> u64 {
    mix(seed, purpose::EXPLAIN, i as u64)
}

pub struct Data {
    pub train: Dataset,
    pub test: Dataset,
}

impl Data {
    pub fn build(cfg: &ExperimentConfig) -> HarnessResult<Self> {
        let d = &cfg.dataset;
        let seed = cfg.run.seed;
        Ok(match d.kind {
            DatasetKind::Glyph => {
                let spec = |n| GlyphSpec {
                    n,
                    side: d.side,
                    glyph_size: d.glyph_size,
                    classes: d.classes,
                    noise_std: d.noise_std,
                    mask: d.mask,
                };
                Data {
                    train: make_masked_glyph(&spec(d.n_train), derive(seed, purpose::TRAIN_DATA))?
                        .with_name("glyph-train"),
                    test: make_masked_glyph(&spec(d.n_test), derive(seed, purpose::TEST_DATA))?.with_name("glyph-test"),
                }
            }
            DatasetKind::Toy => {
                let spec = ToyGaussSpec {
                    n_train: d.n_train,
                    n_test: d.n_test,
                    ..Default::default()
                };
                let (train, test) = make_toy_gauss(&spec, derive(seed, purpose::TRAIN_DATA))?;
                Data { train, test }
            }
        })
    }

    /// The first `n` test samples.
    pub fn head(&self, n: usize) -> HarnessResult<Dataset> {
        if n > self.test.len() {
            return Err(Error::Parameter(format!("asked for {n} samples, test set has {}", self.test.len())).into());
        }
        Ok(self.test.subset(&(0..n).collect::<Vec<_>>())?)
    }

    pub fn calibration_set(&self, cfg: &ExperimentConfig) -> HarnessResult<Dataset> {
        self.head(cfg.calibration.samples.min(self.test.len()))
    }
}

pub fn model_dims(cfg: &ExperimentConfig, data: &Dataset) -> Vec<usize> {
    let mut dims = vec![data.input_dim()];
    dims.extend(&cfg.model.hidden);
    dims.push(data.num_classes());
    dims
}

pub fn optimizer(cfg: &ExperimentConfig) -> OptimizerConfig {
    OptimizerConfig {
        epochs: cfg.model.epochs,
        batch_size: cfg.model.batch_size,
        learning_rate: cfg.model.learning_rate,
        momentum: cfg.model.momentum,
        weight_decay: cfg.model.weight_decay,
        seed: derive(cfg.run.seed, purpose::SHUFFLE),
    }
}

pub fn train_model(cfg: &ExperimentConfig, data: &Data) -> HarnessResult<(MlpModel, TrainedReport)> {
    let mut model = MlpModel::init(&model_dims(cfg, &data.train), derive(cfg.run.seed, purpose::INIT))?;
    let report = train(&mut model, &data.train, Some(&data.test), &optimizer(cfg))?;
    Ok((model, report))
}

pub fn checkpoint_path(cfg: &ExperimentConfig, out: &OutDir) -> PathBuf {
    cfg.model.checkpoint.clone().unwrap_or_else(|| out.path("model.ckpt"))
}

/// Loads the checkpoint if it exists, otherwise trains and saves one.
pub fn load_or_train(cfg: &ExperimentConfig, data: &Data, out: &mut OutDir) -> HarnessResult<MlpModel> {
    let path = checkpoint_path(cfg, out);
    if path.is_file() {
        let model = load_checkpoint(&path)?;
        let want = model_dims(cfg, &data.train);
        let mut got = vec![model.input_dim()];
        got.extend(model.layers().iter().map(|l| l.out_dim()));
        if got != want {
            return Err(Error::Parameter(format!(
                "checkpoint {} has layer sizes {got:?}, config wants {want:?}",
                path.display()
            ))
            .into());
        }
        log::info!("loaded {}", path.display());
        return Ok(model);
    }
    let (model, report) = train_model(cfg, data)?;
    if let Some(acc) = report.final_test_accuracy() {
        log::info!("trained model, test accuracy {acc:.4}");
    }
    save_checkpoint(&model, &path)?;
    if path.parent() == Some(out.root()) {
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            out.record(name);
        }
    }
    Ok(model)
}

/// Noise levels for every enhancer, with the searches that produced them.
#[derive(Debug, Clone)]
pub struct NoiseLevels {
    pub sigma_sg: f64,
    pub sigma_ng: f64,
    pub fg_sigma_sg: f64,
    pub fg_sigma_ng: f64,
    pub ng_search: Option<CalibrationResult>,
    pub fg_search: Option<CalibrationResult>,
    /// How the FusionGrad pair was chosen.
    pub fg_source: &'static str,
}

impl NoiseLevels {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("enhancer,sigma_sg,sigma_ng,source\n");
        let ng_src = if self.ng_search.is_some() { "calibrated" } else { "fixed" };
        s += "baseline,0,0,none\n";
        s += &format!("sg,{},0,rule\n", self.sigma_sg);
        s += &format!("ng,0,{},{ng_src}\n", self.sigma_ng);
        s += &format!("fg,{},{},{}\n", self.fg_sigma_sg, self.fg_sigma_ng, self.fg_source);
        s
    }
}

pub fn resolve_noise(cfg: &ExperimentConfig, model: &MlpModel, data: &Data) -> HarnessResult<NoiseLevels> {
    let e = &cfg.enhancers;
    let cal = data.calibration_set(cfg)?;
    let seed = derive(cfg.run.seed, purpose::CALIBRATION);
    let sigma_sg = match e.sigma_sg {
        Some(s) => s,
        None => sigma_sg_rule_dataset(&data.test, e.alpha_sg)?,
    };
    let probe = || -> HarnessResult<EnsembleProbe<'_>> {
        Ok(EnsembleProbe::new(model, &cal, cfg.calibration.repeats, seed)?.with_scope(e.noise_scope))
    };
    let (sigma_ng, ng_search) = match e.sigma_ng {
        Some(s) => (s, None),
        None => {
            let r = calibrate(&probe()?, e.target_drop, e.tol)?;
            log::info!("sigma_ng = {:.5} (drop {:.4}, {} evaluations)", r.sigma, r.achieved_drop, r.evaluations());
            (r.sigma, Some(r))
        }
    };
    let halve = (sigma_sg / 2.0, sigma_ng / 2.0);
    let (fg_sigma_sg, fg_sigma_ng, fg_search, fg_source) = match (e.fg_sigma_sg, e.fg_sigma_ng) {
        (Some(a), Some(b)) => (a, b, None, "fixed"),
        _ if e.fg_mode == FgMode::Halve => (halve.0, halve.1, None, "halved"),
        _ => {
            let sg = match e.fg_sigma_sg {
                Some(s) => s,
                None => sigma_sg_rule_dataset(&data.test, e.fg_alpha_sg)?,
            };
            let joint = probe().and_then(|p| Ok(p.with_input_noise(sg)?));
            match joint.and_then(|p| Ok(calibrate(&p, e.target_drop, e.tol)?)) {
                Ok(r) => (sg, r.sigma, Some(r), "joint"),
                Err(HarnessError::Core(Error::Calibration { message, .. })) => {
                    log::warn!("joint FusionGrad calibration failed ({message}); halving the single-method levels");
                    (halve.0, halve.1, None, "halved_fallback")
                }
                Err(other) => return Err(other),
            }
        }
    };
    Ok(NoiseLevels {
        sigma_sg,
        sigma_ng,
        fg_sigma_sg,
        fg_sigma_ng,
        ng_search,
        fg_search,
        fg_source,
    })
}

pub fn enhancer_config(cfg: &ExperimentConfig, levels: &NoiseLevels, enhancer: Enhancer, base_seed: u64) -> EnhancerConfig {
    let e = &cfg.enhancers;
    let (sigma_sg, sigma_ng) = match enhancer {
        Enhancer::None => (0.0, 0.0),
        Enhancer::SmoothGrad => (levels.sigma_sg, 0.0),
        Enhancer::NoiseGrad => (0.0, levels.sigma_ng),
        Enhancer::FusionGrad => (levels.fg_sigma_sg, levels.fg_sigma_ng),
    };
    EnhancerConfig {
        sigma_sg,
        sigma_ng,
        n_inputs: e.n_inputs,
        m_models: e.m_models,
        base_seed,
        noise_scope: e.noise_scope,
        averaging: e.averaging,
        share_input_noise: e.share_input_noise,
    }
}

pub fn explainer(cfg: &ExperimentConfig, data: &Data) -> ExplainerSpec {
    cfg.explainer_spec(data.train.inputs())
}

/// Occlusion value for faithfulness: configured, or the test-set minimum.
pub fn faithfulness_baseline(cfg: &ExperimentConfig, data: &Data) -> f64 {
    cfg.metrics
        .faithfulness_baseline
        .unwrap_or_else(|| data.test.value_range().map_or(0.0, |(lo, _)| lo))
}

pub fn trace_csv(result: &CalibrationResult) -> String {
    let mut s = String::from("evaluation,sigma,acc,drop,clamped\n");
    for (i, p) in result.search_trace.iter().enumerate() {
        s += &format!("{i},{},{},{},{}\n", p.sigma, p.acc, p.drop, u8::from(p.clamped));
    }
    s
}
