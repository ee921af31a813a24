//! Noise-level selection.
//!
//! `AD(σ) = 1 − (ACC(σ) − 1/k) / (ACC(0) − 1/k)`, clamped at zero. The
//! chance level is fixed at `1/k`; datasets are assumed class-balanced.
//! One "evaluation" below is one `AD(σ)` estimate, itself the mean accuracy
//! of `repeats` perturbed models.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::enhance::noisy_input;
use crate::nn::{MlpModel, NoiseScope};
use crate::seed::{self, stream};
use crate::{Error, Result, Tensor};

pub const DEFAULT_REPEATS: usize = 10;
pub const MAX_EVALUATIONS: usize = 25;
pub const GRID_LO: f64 = 1e-3;
pub const GRID_HI: f64 = 2.0;
pub const GRID_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub sigma: f64,
    pub acc: f64,
    pub drop: f64,
    /// The raw drop was negative (`ACC(σ) > ACC(0)`) and was clamped to 0.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub sigma: f64,
    pub achieved_drop: f64,
    pub acc_at_sigma: f64,
    pub acc_clean: f64,
    pub chance_level: f64,
    /// Every evaluation in the order it was made.
    pub search_trace: Vec<TracePoint>,
}

impl CalibrationResult {
    pub fn evaluations(&self) -> usize {
        self.search_trace.len()
    }
}

/// `α · (max − min)` of a single reference input.
pub fn sigma_sg_rule(x_reference: &Tensor, alpha_sg: f64) -> Result<f64> {
    check_alpha(alpha_sg)?;
    if x_reference.is_empty() {
        return Err(Error::EmptyInput("reference tensor".into()));
    }
    Ok(alpha_sg * (x_reference.max() - x_reference.min()))
}

/// `α · (max − min)` with the extremes taken over every input of the set.
pub fn sigma_sg_rule_dataset(data: &Dataset, alpha_sg: f64) -> Result<f64> {
    check_alpha(alpha_sg)?;
    let (lo, hi) = data
        .value_range()
        .ok_or_else(|| Error::EmptyInput(format!("dataset `{}`", data.name())))?;
    Ok(alpha_sg * (hi - lo))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha_sg must be finite and >= 0, got {alpha}")));
    }
    Ok(())
}

/// Drop formula; returns `(clamped drop, was clamped)`.
pub fn drop_from_accuracy(acc: f64, acc_clean: f64, chance: f64) -> Result<(f64, bool)> {
    if acc_clean == chance {
        return Err(Error::DegenerateModel { acc_clean, chance });
    }
    let raw = 1.0 - (acc - chance) / (acc_clean - chance);
    Ok(if raw < 0.0 { (0.0, true) } else { (raw, false) })
}

/// Something whose accuracy can be measured at a noise level.
pub trait AccuracyProbe {
    fn acc_clean(&self) -> f64;
    fn chance_level(&self) -> f64;
    fn accuracy(&self, sigma: f64) -> Result<f64>;

    fn evaluate(&self, sigma: f64) -> Result<TracePoint> {
        let acc = self.accuracy(sigma)?;
        let (drop, clamped) = drop_from_accuracy(acc, self.acc_clean(), self.chance_level())?;
        Ok(TracePoint { sigma, acc, drop, clamped })
    }
}

/// Accuracy under multiplicative weight noise `σ_NG`, optionally with
/// additive input noise `σ_SG` on every sample (the joint `AD_++`).
pub struct EnsembleProbe<'a> {
    model: &'a MlpModel,
    data: &'a Dataset,
    repeats: usize,
    seed: u64,
    scope: NoiseScope,
    sigma_sg: f64,
    acc_clean: f64,
}

impl<'a> EnsembleProbe<'a> {
    pub fn new(model: &'a MlpModel, data: &'a Dataset, repeats: usize, seed: u64) -> Result<Self> {
        if repeats == 0 {
            return Err(Error::Parameter("repeats must be >= 1".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyInput(format!("dataset `{}`", data.name())));
        }
        let acc_clean = model.accuracy(data)?;
        let probe = Self {
            model,
            data,
            repeats,
            seed,
            scope: NoiseScope::default(),
            sigma_sg: 0.0,
            acc_clean,
        };
        drop_from_accuracy(acc_clean, acc_clean, probe.chance_level())?;
        Ok(probe)
    }

    pub fn with_scope(mut self, scope: NoiseScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn with_input_noise(mut self, sigma_sg: f64) -> Result<Self> {
        if !(sigma_sg >= 0.0) || !sigma_sg.is_finite() {
            return Err(Error::Parameter(format!("sigma_sg must be finite and >= 0, got {sigma_sg}")));
        }
        self.sigma_sg = sigma_sg;
        Ok(self)
    }

    fn repeat_accuracy(&self, sigma_ng: f64, r: usize) -> Result<f64> {
        let member = self
            .model
            .perturb_weights(sigma_ng, seed::mix(self.seed, stream::CALIBRATION, r as u64), self.scope)?;
        if self.sigma_sg == 0.0 {
            return member.accuracy(self.data);
        }
        let input_base = seed::mix(self.seed, stream::CALIBRATION_INPUT, r as u64);
        let mut hits = 0usize;
        for (s, (x, &y)) in self.data.inputs().iter().zip(self.data.labels()).enumerate() {
            let xn = noisy_input(x, self.sigma_sg, seed::mix(input_base, 0, s as u64));
            hits += usize::from(member.predict(&xn)? == y);
        }
        Ok(hits as f64 / self.data.len() as f64)
    }
}

impl AccuracyProbe for EnsembleProbe<'_> {
    fn acc_clean(&self) -> f64 {
        self.acc_clean
    }

    fn chance_level(&self) -> f64 {
        1.0 / self.data.num_classes() as f64
    }

    fn accuracy(&self, sigma: f64) -> Result<f64> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if sigma == 0.0 && self.sigma_sg == 0.0 {
            return Ok(self.acc_clean);
        }
        let accs = (0..self.repeats)
            .into_par_iter()
            .map(|r| self.repeat_accuracy(sigma, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(accs.iter().sum::<f64>() / accs.len() as f64)
    }
}

/// `AD(σ_NG)` on `data` with `repeats` perturbed models.
pub fn accuracy_drop(model: &MlpModel, data: &Dataset, sigma_ng: f64, repeats: usize, seed: u64) -> Result<f64> {
    Ok(EnsembleProbe::new(model, data, repeats, seed)?.evaluate(sigma_ng)?.drop)
}

/// Log-spaced grid over `[GRID_LO, GRID_HI]`.
pub fn log_grid(points: usize) -> Vec<f64> {
    let (a, b) = (GRID_LO.ln(), GRID_HI.ln());
    let last = points.saturating_sub(1);
    (0..points)
        .map(|i| match i {
            0 => GRID_LO,
            i if i == last => GRID_HI,
            i => (a + (b - a) * i as f64 / last as f64).exp(),
        })
        .collect()
}

/// Grid scan then log-space bisection on the first bracket that crosses
/// `target`. Stops at the first point within `tol` or after
/// [`MAX_EVALUATIONS`], returning the closest point seen.
pub fn calibrate(probe: &impl AccuracyProbe, target_drop: f64, tol: f64) -> Result<CalibrationResult> {
    if !(0.0..1.0).contains(&target_drop) {
        return Err(Error::Parameter(format!("target_drop must lie in [0, 1), got {target_drop}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tol must be > 0, got {tol}")));
    }
    let mut trace = Vec::new();
    let result = |trace: Vec<TracePoint>, best: TracePoint| CalibrationResult {
        sigma: best.sigma,
        achieved_drop: best.drop,
        acc_at_sigma: best.acc,
        acc_clean: probe.acc_clean(),
        chance_level: probe.chance_level(),
        search_trace: trace,
    };
    let hit = |p: &TracePoint| (p.drop - target_drop).abs() <= tol;

    let mut bracket = None;
    let mut below: Option<f64> = None;
    for sigma in log_grid(GRID_POINTS) {
        let p = probe.evaluate(sigma)?;
        trace.push(p);
        log::debug!("calibration grid sigma={sigma:.6} drop={:.4}", p.drop);
        if hit(&p) {
            return Ok(result(trace, p));
        }
        if p.drop > target_drop {
            bracket = below.map(|lo| (lo, sigma));
            break;
        }
        below = Some(sigma);
    }
    let Some((mut lo, mut hi)) = bracket else {
        let message = if below.is_some() {
            format!("accuracy drop never reaches {target_drop} on the grid (model too robust)")
        } else {
            format!("accuracy drop exceeds {target_drop} at the smallest grid sigma (model too brittle)")
        };
        return Err(Error::Calibration { message, trace });
    };

    while trace.len() < MAX_EVALUATIONS {
        let mid = (lo * hi).sqrt();
        let p = probe.evaluate(mid)?;
        trace.push(p);
        log::debug!("calibration bisect sigma={mid:.6} drop={:.4}", p.drop);
        if hit(&p) {
            return Ok(result(trace, p));
        }
        if p.drop < target_drop {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = *trace
        .iter()
        .min_by(|a, b| (a.drop - target_drop).abs().total_cmp(&(b.drop - target_drop).abs()))
        .expect("trace is nonempty");
    log::warn!(
        "calibration stopped after {} evaluations; best drop {:.4} at sigma {:.6}",
        trace.len(),
        best.drop,
        best.sigma
    );
    Ok(result(trace, best))
}

pub fn calibrate_ng(model: &MlpModel, data: &Dataset, target_drop: f64, tol: f64, seed: u64) -> Result<CalibrationResult> {
    calibrate(&EnsembleProbe::new(model, data, DEFAULT_REPEATS, seed)?, target_drop, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FgCalibrationMode {
    /// Fix `σ_SG = alpha_sg · range(data)` and tune `σ_NG` on the joint drop.
    Joint { alpha_sg: f64 },
    /// Halve both single-method noise levels.
    Halve { solo_sg: f64, solo_ng: f64 },
}

impl Default for FgCalibrationMode {
    fn default() -> Self {
        FgCalibrationMode::Joint { alpha_sg: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FgCalibration {
    pub sigma_sg: f64,
    pub sigma_ng: f64,
    /// Search details; `None` in halving mode.
    pub result: Option<CalibrationResult>,
}

pub fn calibrate_fg(
    model: &MlpModel,
    data: &Dataset,
    mode: FgCalibrationMode,
    target_drop: f64,
    tol: f64,
    seed: u64,
) -> Result<FgCalibration> {
    match mode {
        FgCalibrationMode::Halve { solo_sg, solo_ng } => {
            if !(solo_sg >= 0.0 && solo_ng >= 0.0) {
                return Err(Error::Parameter("solo noise levels must be >= 0".into()));
            }
            Ok(FgCalibration {
                sigma_sg: solo_sg / 2.0,
                sigma_ng: solo_ng / 2.0,
                result: None,
            })
        }
        FgCalibrationMode::Joint { alpha_sg } => {
            let sigma_sg = sigma_sg_rule_dataset(data, alpha_sg)?;
            let probe = EnsembleProbe::new(model, data, DEFAULT_REPEATS, seed)?.with_input_noise(sigma_sg)?;
            let result = calibrate(&probe, target_drop, tol)?;
            Ok(FgCalibration {
                sigma_sg,
                sigma_ng: result.sigma,
                result: Some(result),
            })
        }
    }
}

/// Largest amount by which a trace point's drop falls below the highest
/// drop at any smaller σ. Zero for a monotone trace.
pub fn trace_monotonicity_violation(trace: &[TracePoint]) -> f64 {
    let mut pts = trace.to_vec();
    pts.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    let mut high = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for p in pts {
        worst = worst.max(high - p.drop);
        high = high.max(p.drop);
    }
    worst
}
