//! Experiment configuration.
//!
//! Plain UTF-8 text with `[section]` headers and `key = value` lines.
//! Lines starting with `#` or `;` are comments. Unknown sections, unknown
//! keys and repeated keys are errors. Lists are comma separated.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use gnlab_core::data::MaskKind;
use gnlab_core::enhance::Averaging;
use gnlab_core::explain::{Enhancer, ExplainerSpec, Method};
use gnlab_core::metrics::Metric;
use gnlab_core::nn::NoiseScope;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Glyph,
    Toy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub n_train: usize,
    pub n_test: usize,
    pub side: usize,
    pub glyph_size: usize,
    pub classes: usize,
    pub noise_std: f64,
    pub mask: MaskKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Defaults to `model.ckpt` in the output directory.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainerConfig {
    pub method: Method,
    pub ig_steps: usize,
    pub shap_samples: usize,
    pub shap_pool: usize,
    pub occlusion_patch: usize,
    pub occlusion_fill: f64,
    pub lrp_gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgMode {
    Joint,
    Halve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancersConfig {
    pub list: Vec<Enhancer>,
    pub n_inputs: usize,
    pub m_models: usize,
    pub alpha_sg: f64,
    /// Fixed noise levels; `None` means heuristic.
    pub sigma_sg: Option<f64>,
    pub sigma_ng: Option<f64>,
    pub target_drop: f64,
    pub tol: f64,
    pub fg_mode: FgMode,
    pub fg_alpha_sg: f64,
    pub fg_sigma_sg: Option<f64>,
    pub fg_sigma_ng: Option<f64>,
    pub averaging: Averaging,
    pub share_input_noise: bool,
    pub noise_scope: NoiseScope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub list: Vec<Metric>,
    pub faithfulness_subset: usize,
    pub faithfulness_iterations: usize,
    /// `None` means the smallest value in the test set.
    pub faithfulness_baseline: Option<f64>,
    pub sensitivity_radius: f64,
    pub sensitivity_samples: usize,
    pub sanity_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub sigma_ng: Vec<f64>,
    pub sigma_sg: Vec<f64>,
    pub curve_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmSection {
    pub class: usize,
    /// Neuron target instead of a class logit when both are set.
    pub layer: Option<usize>,
    pub unit: Option<usize>,
    pub steps: usize,
    pub step_size: f64,
    pub l2: f64,
    pub jitter: f64,
    pub m_models: usize,
    /// `None` means the calibrated NoiseGrad level.
    pub sigma_ng: Option<f64>,
    pub box_lo: f64,
    pub box_hi: f64,
    pub resample: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub repeats: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub explainer: ExplainerConfig,
    pub enhancers: EnhancersConfig,
    pub metrics: MetricsConfig,
    pub run: RunConfig,
    pub sweep: SweepConfig,
    pub am: AmSection,
    pub calibration: CalibrationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig {
                kind: DatasetKind::Glyph,
                n_train: 2048,
                n_test: 512,
                side: 12,
                glyph_size: 5,
                classes: 4,
                noise_std: 0.2,
                mask: MaskKind::BoundingBox,
            },
            model: ModelConfig {
                hidden: vec![64, 32],
                epochs: 60,
                batch_size: 32,
                learning_rate: 0.02,
                momentum: 0.9,
                weight_decay: 0.005,
                checkpoint: None,
            },
            explainer: ExplainerConfig {
                method: Method::Saliency,
                ig_steps: gnlab_core::explain::DEFAULT_IG_STEPS,
                shap_samples: gnlab_core::explain::DEFAULT_SHAP_SAMPLES,
                shap_pool: gnlab_core::explain::DEFAULT_SHAP_POOL,
                occlusion_patch: 2,
                occlusion_fill: 0.0,
                lrp_gamma: 0.25,
            },
            enhancers: EnhancersConfig {
                list: Enhancer::ALL.to_vec(),
                n_inputs: 10,
                m_models: 10,
                alpha_sg: 0.2,
                sigma_sg: None,
                sigma_ng: None,
                target_drop: 0.05,
                tol: 0.01,
                fg_mode: FgMode::Joint,
                fg_alpha_sg: 0.1,
                fg_sigma_sg: None,
                fg_sigma_ng: None,
                averaging: Averaging::PostAbs,
                share_input_noise: true,
                noise_scope: NoiseScope::WeightsAndBiases,
            },
            metrics: MetricsConfig {
                list: Metric::ALL.to_vec(),
                faithfulness_subset: 32,
                faithfulness_iterations: 100,
                faithfulness_baseline: None,
                sensitivity_radius: 0.2,
                sensitivity_samples: 10,
                sanity_samples: 64,
            },
            run: RunConfig {
                seed: 0,
                samples: 128,
                out: PathBuf::from("gnlab-out"),
                threads: None,
            },
            sweep: SweepConfig {
                sigma_ng: vec![0.0, 0.05, 0.1, 0.2, 0.3],
                sigma_sg: vec![0.0, 0.05, 0.1, 0.2],
                curve_points: 16,
            },
            am: AmSection {
                class: 0,
                layer: None,
                unit: None,
                steps: 512,
                step_size: 0.05,
                l2: 1e-3,
                jitter: 0.01,
                m_models: 10,
                sigma_ng: None,
                box_lo: 0.0,
                box_hi: 1.0,
                resample: false,
            },
            calibration: CalibrationConfig {
                repeats: gnlab_core::calibration::DEFAULT_REPEATS,
                samples: 512,
            },
        }
    }
}

fn num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn opt<T: FromStr>(v: &str) -> Result<Option<T>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        num(v).map(Some)
    }
}

fn flag(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

fn list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| item(s.trim())).collect()
}

fn named<T>(v: &str, parse: impl Fn(&str) -> Option<T>, what: &str) -> Result<T, String> {
    parse(v).ok_or_else(|| format!("unknown {what} `{v}`"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| ConfigError { line: line_no, message };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err("unterminated section header".into()))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| err(format!("key `{key}` outside of any section")))?;
            if !seen.insert(format!("{sec}.{key}")) {
                return Err(err(format!("duplicate key `{key}` in [{sec}]")));
            }
            cfg.set(sec, key, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<(), String> {
        match (section, key) {
            ("dataset", "kind") => {
                self.dataset.kind = match v {
                    "glyph" => DatasetKind::Glyph,
                    "toy" => DatasetKind::Toy,
                    _ => return Err(format!("unknown dataset kind `{v}`")),
                }
            }
            ("dataset", "n_train") => self.dataset.n_train = num(v)?,
            ("dataset", "n_test") => self.dataset.n_test = num(v)?,
            ("dataset", "side") => self.dataset.side = num(v)?,
            ("dataset", "glyph_size") => self.dataset.glyph_size = num(v)?,
            ("dataset", "classes") => self.dataset.classes = num(v)?,
            ("dataset", "noise_std") => self.dataset.noise_std = num(v)?,
            ("dataset", "mask") => self.dataset.mask = named(v, MaskKind::parse, "mask kind")?,

            ("model", "hidden") => self.model.hidden = list(v, num)?,
            ("model", "epochs") => self.model.epochs = num(v)?,
            ("model", "batch_size") => self.model.batch_size = num(v)?,
            ("model", "learning_rate") => self.model.learning_rate = num(v)?,
            ("model", "momentum") => self.model.momentum = num(v)?,
            ("model", "weight_decay") => self.model.weight_decay = num(v)?,
            ("model", "checkpoint") => {
                self.model.checkpoint = if v == "auto" { None } else { Some(PathBuf::from(v)) }
            }

            ("explainer", "method") => self.explainer.method = named(v, Method::parse, "explainer")?,
            ("explainer", "ig_steps") => self.explainer.ig_steps = num(v)?,
            ("explainer", "shap_samples") => self.explainer.shap_samples = num(v)?,
            ("explainer", "shap_pool") => self.explainer.shap_pool = num(v)?,
            ("explainer", "occlusion_patch") => self.explainer.occlusion_patch = num(v)?,
            ("explainer", "occlusion_fill") => self.explainer.occlusion_fill = num(v)?,
            ("explainer", "lrp_gamma") => self.explainer.lrp_gamma = num(v)?,

            ("enhancers", "list") => self.enhancers.list = list(v, |s| named(s, Enhancer::parse, "enhancer"))?,
            ("enhancers", "n_inputs") => self.enhancers.n_inputs = num(v)?,
            ("enhancers", "m_models") => self.enhancers.m_models = num(v)?,
            ("enhancers", "alpha_sg") => self.enhancers.alpha_sg = num(v)?,
            ("enhancers", "sigma_sg") => self.enhancers.sigma_sg = opt(v)?,
            ("enhancers", "sigma_ng") => self.enhancers.sigma_ng = opt(v)?,
            ("enhancers", "target_drop") => self.enhancers.target_drop = num(v)?,
            ("enhancers", "tol") => self.enhancers.tol = num(v)?,
            ("enhancers", "fg_mode") => {
                self.enhancers.fg_mode = match v {
                    "joint" => FgMode::Joint,
                    "halve" => FgMode::Halve,
                    _ => return Err(format!("unknown fg_mode `{v}`")),
                }
            }
            ("enhancers", "fg_alpha_sg") => self.enhancers.fg_alpha_sg = num(v)?,
            ("enhancers", "fg_sigma_sg") => self.enhancers.fg_sigma_sg = opt(v)?,
            ("enhancers", "fg_sigma_ng") => self.enhancers.fg_sigma_ng = opt(v)?,
            ("enhancers", "averaging") => self.enhancers.averaging = named(v, Averaging::parse, "averaging")?,
            ("enhancers", "share_input_noise") => self.enhancers.share_input_noise = flag(v)?,
            ("enhancers", "noise_scope") => self.enhancers.noise_scope = named(v, NoiseScope::parse, "noise scope")?,

            ("metrics", "list") => self.metrics.list = list(v, |s| named(s, Metric::parse, "metric"))?,
            ("metrics", "faithfulness_subset") => self.metrics.faithfulness_subset = num(v)?,
            ("metrics", "faithfulness_iterations") => self.metrics.faithfulness_iterations = num(v)?,
            ("metrics", "faithfulness_baseline") => self.metrics.faithfulness_baseline = opt(v)?,
            ("metrics", "sensitivity_radius") => self.metrics.sensitivity_radius = num(v)?,
            ("metrics", "sensitivity_samples") => self.metrics.sensitivity_samples = num(v)?,
            ("metrics", "sanity_samples") => self.metrics.sanity_samples = num(v)?,

            ("run", "seed") => self.run.seed = num(v)?,
            ("run", "samples") => self.run.samples = num(v)?,
            ("run", "out") => self.run.out = PathBuf::from(v),
            ("run", "threads") => self.run.threads = opt(v)?,

            ("sweep", "sigma_ng") => self.sweep.sigma_ng = list(v, num)?,
            ("sweep", "sigma_sg") => self.sweep.sigma_sg = list(v, num)?,
            ("sweep", "curve_points") => self.sweep.curve_points = num(v)?,

            ("am", "class") => self.am.class = num(v)?,
            ("am", "layer") => self.am.layer = opt(v)?,
            ("am", "unit") => self.am.unit = opt(v)?,
            ("am", "steps") => self.am.steps = num(v)?,
            ("am", "step_size") => self.am.step_size = num(v)?,
            ("am", "l2") => self.am.l2 = num(v)?,
            ("am", "jitter") => self.am.jitter = num(v)?,
            ("am", "m_models") => self.am.m_models = num(v)?,
            ("am", "sigma_ng") => self.am.sigma_ng = opt(v)?,
            ("am", "box_lo") => self.am.box_lo = num(v)?,
            ("am", "box_hi") => self.am.box_hi = num(v)?,
            ("am", "resample") => self.am.resample = flag(v)?,

            ("calibration", "repeats") => self.calibration.repeats = num(v)?,
            ("calibration", "samples") => self.calibration.samples = num(v)?,

            _ => return Err(format!("unknown key `{key}` in [{section}]")),
        }
        Ok(())
    }

    /// Cross-field checks that do not need a model.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError { line: 0, message: m.to_string() });
        if self.run.samples == 0 {
            return fail("run.samples must be >= 1");
        }
        if self.run.threads == Some(0) {
            return fail("run.threads must be >= 1");
        }
        if self.dataset.n_test == 0 || self.dataset.n_train == 0 {
            return fail("dataset sizes must be >= 1");
        }
        if self.enhancers.n_inputs == 0 || self.enhancers.m_models == 0 {
            return fail("enhancers.n_inputs and m_models must be >= 1");
        }
        if !(self.enhancers.target_drop > 0.0 && self.enhancers.target_drop < 1.0) {
            return fail("enhancers.target_drop must lie in (0, 1)");
        }
        if !(self.enhancers.tol > 0.0) {
            return fail("enhancers.tol must be > 0");
        }
        for s in [self.enhancers.alpha_sg, self.enhancers.fg_alpha_sg] {
            if !(s >= 0.0) {
                return fail("alpha values must be >= 0");
            }
        }
        let fixed = [
            self.enhancers.sigma_sg,
            self.enhancers.sigma_ng,
            self.enhancers.fg_sigma_sg,
            self.enhancers.fg_sigma_ng,
            self.am.sigma_ng,
        ];
        if fixed.iter().flatten().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return fail("noise levels must be finite and >= 0");
        }
        if self.sweep.sigma_ng.iter().chain(&self.sweep.sigma_sg).any(|s| !(*s >= 0.0)) {
            return fail("sweep noise levels must be >= 0");
        }
        if self.calibration.repeats == 0 || self.calibration.samples == 0 {
            return fail("calibration.repeats and samples must be >= 1");
        }
        if self.am.layer.is_some() != self.am.unit.is_some() {
            return fail("am.layer and am.unit must be set together");
        }
        if self.metrics.sanity_samples == 0 {
            return fail("metrics.sanity_samples must be >= 1");
        }
        Ok(())
    }

    /// The explainer described by `[explainer]`; GradientSHAP draws its
    /// baselines from `pool`.
    pub fn explainer_spec(&self, pool: &[gnlab_core::Tensor]) -> ExplainerSpec {
        let e = &self.explainer;
        match e.method {
            Method::Saliency => ExplainerSpec::Saliency,
            Method::IntegratedGradients => ExplainerSpec::IntegratedGradients {
                steps: e.ig_steps,
                baseline: None,
            },
            Method::GradientShap => ExplainerSpec::GradientShap {
                samples: e.shap_samples,
                pool: pool.iter().take(e.shap_pool).cloned().collect(),
                sigma: None,
            },
            Method::Occlusion => ExplainerSpec::Occlusion {
                patch: e.occlusion_patch,
                fill: e.occlusion_fill,
            },
            Method::LrpGamma => ExplainerSpec::LrpGamma { gamma: e.lrp_gamma },
        }
    }

    /// Every resolved value, in a form [`ExperimentConfig::parse`] reads back.
    pub fn render(&self) -> String {
        fn o<T: fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map_or("auto".to_string(), |v| v.to_string())
        }
        fn l<T: fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let (d, m, e, n, mt, r, s, a, c) = (
            &self.dataset,
            &self.model,
            &self.explainer,
            &self.enhancers,
            &self.metrics,
            &self.run,
            &self.sweep,
            &self.am,
            &self.calibration,
        );
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "[dataset]");
        let kind = match d.kind {
            DatasetKind::Glyph => "glyph",
            DatasetKind::Toy => "toy",
        };
        let _ = writeln!(w, "kind = {kind}\nn_train = {}\nn_test = {}", d.n_train, d.n_test);
        let _ = writeln!(w, "side = {}\nglyph_size = {}\nclasses = {}", d.side, d.glyph_size, d.classes);
        let _ = writeln!(w, "noise_std = {}\nmask = {}", d.noise_std, d.mask.name());
        let _ = writeln!(w, "\n[model]\nhidden = {}\nepochs = {}", l(&m.hidden), m.epochs);
        let _ = writeln!(w, "batch_size = {}\nlearning_rate = {}", m.batch_size, m.learning_rate);
        let _ = writeln!(w, "momentum = {}\nweight_decay = {}", m.momentum, m.weight_decay);
        let ckpt = m.checkpoint.as_ref().map_or("auto".to_string(), |p| p.display().to_string());
        let _ = writeln!(w, "checkpoint = {ckpt}");
        let _ = writeln!(w, "\n[explainer]\nmethod = {}\nig_steps = {}", e.method.name(), e.ig_steps);
        let _ = writeln!(w, "shap_samples = {}\nshap_pool = {}", e.shap_samples, e.shap_pool);
        let _ = writeln!(w, "occlusion_patch = {}\nocclusion_fill = {}", e.occlusion_patch, e.occlusion_fill);
        let _ = writeln!(w, "lrp_gamma = {}", e.lrp_gamma);
        let names: Vec<&str> = n.list.iter().map(|x| x.name()).collect();
        let _ = writeln!(w, "\n[enhancers]\nlist = {}", names.join(","));
        let _ = writeln!(w, "n_inputs = {}\nm_models = {}\nalpha_sg = {}", n.n_inputs, n.m_models, n.alpha_sg);
        let _ = writeln!(w, "sigma_sg = {}\nsigma_ng = {}", o(&n.sigma_sg), o(&n.sigma_ng));
        let _ = writeln!(w, "target_drop = {}\ntol = {}", n.target_drop, n.tol);
        let fg = match n.fg_mode {
            FgMode::Joint => "joint",
            FgMode::Halve => "halve",
        };
        let _ = writeln!(w, "fg_mode = {fg}\nfg_alpha_sg = {}", n.fg_alpha_sg);
        let _ = writeln!(w, "fg_sigma_sg = {}\nfg_sigma_ng = {}", o(&n.fg_sigma_sg), o(&n.fg_sigma_ng));
        let _ = writeln!(w, "averaging = {}\nshare_input_noise = {}", n.averaging.name(), n.share_input_noise);
        let _ = writeln!(w, "noise_scope = {}", n.noise_scope.name());
        let names: Vec<&str> = mt.list.iter().map(|x| x.name()).collect();
        let _ = writeln!(w, "\n[metrics]\nlist = {}", names.join(","));
        let _ = writeln!(w, "faithfulness_subset = {}", mt.faithfulness_subset);
        let _ = writeln!(w, "faithfulness_iterations = {}", mt.faithfulness_iterations);
        let _ = writeln!(w, "faithfulness_baseline = {}", o(&mt.faithfulness_baseline));
        let _ = writeln!(w, "sensitivity_radius = {}", mt.sensitivity_radius);
        let _ = writeln!(w, "sensitivity_samples = {}", mt.sensitivity_samples);
        let _ = writeln!(w, "sanity_samples = {}", mt.sanity_samples);
        let _ = writeln!(w, "\n[run]\nseed = {}\nsamples = {}", r.seed, r.samples);
        let _ = writeln!(w, "out = {}\nthreads = {}", r.out.display(), o(&r.threads));
        let _ = writeln!(w, "\n[sweep]\nsigma_ng = {}\nsigma_sg = {}", l(&s.sigma_ng), l(&s.sigma_sg));
        let _ = writeln!(w, "curve_points = {}", s.curve_points);
        let _ = writeln!(w, "\n[am]\nclass = {}\nlayer = {}\nunit = {}", a.class, o(&a.layer), o(&a.unit));
        let _ = writeln!(w, "steps = {}\nstep_size = {}\nl2 = {}", a.steps, a.step_size, a.l2);
        let _ = writeln!(w, "jitter = {}\nm_models = {}\nsigma_ng = {}", a.jitter, a.m_models, o(&a.sigma_ng));
        let _ = writeln!(w, "box_lo = {}\nbox_hi = {}\nresample = {}", a.box_lo, a.box_hi, a.resample);
        let _ = writeln!(w, "\n[calibration]\nrepeats = {}\nsamples = {}", c.repeats, c.samples);
        out
    }
}

const SECTIONS: [&str; 9] = [
    "dataset",
    "model",
    "explainer",
    "enhancers",
    "metrics",
    "run",
    "sweep",
    "am",
    "calibration",
];
