//! One function per subcommand. Each writes its files into the output
//! directory and returns the numbers it computed.

use std::fmt::Write as _;

use rayon::prelude::*;

use gnlab_core::am::{activation_maximize, plain_activation_maximize, AmConfig, AmResult, AmTarget};
use gnlab_core::calibration::{calibrate, AccuracyProbe, CalibrationResult, EnsembleProbe, GRID_HI, GRID_LO};
use gnlab_core::data::{Dataset, ToyGaussSpec};
use gnlab_core::enhance::{enhance, ensemble_stream, noisy_input, perturbed_member, Averaging, EnhancerConfig};
use gnlab_core::explain::{encode_attribution, Attribution, AttributionRecord, Enhancer, ExplainerSpec};
use gnlab_core::metrics::{
    faithfulness_corr, gini_index, max_sensitivity, ranking_auc, relevance_rank_accuracy, sanity_randomization,
    wilcoxon_signed_rank, FaithfulnessConfig, Metric, MetricReport, SanityReport, SensitivityConfig, Wilcoxon,
};
use gnlab_core::nn::{MlpModel, TrainedReport};
use gnlab_core::render::{encode_pgm, encode_svg};
use gnlab_core::seed::{mix, stream};
use gnlab_core::tensor::RunningMean;
use gnlab_core::{Error, Tensor};

use crate::config::{DatasetKind, ExperimentConfig};
use crate::error::HarnessResult;
use crate::output::OutDir;
use crate::pipeline::{self, derive, purpose, sample_seed, Data, NoiseLevels};
use crate::plot::{self, Arrow, Bounds, Series};

pub const SIGNIFICANCE: f64 = 0.05;

fn snapshot(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<()> {
    out.write("config.ini", cfg.render())?;
    Ok(())
}

fn masks_of(data: &Dataset) -> HarnessResult<&[Tensor]> {
    data.masks()
        .ok_or_else(|| Error::Parameter(format!("dataset `{}` has no ground-truth masks", data.name())).into())
}

pub fn train(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<TrainedReport> {
    let data = Data::build(cfg)?;
    let (model, report) = pipeline::train_model(cfg, &data)?;
    let path = pipeline::checkpoint_path(cfg, out);
    gnlab_core::nn::save_checkpoint(&model, &path)?;
    if path.parent() == Some(out.root()) {
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            out.record(name);
        }
    }
    let mut log = String::from("epoch,loss,train_accuracy,test_accuracy\n");
    for e in &report.epochs {
        let test = e.test_accuracy.map_or(String::new(), |a| a.to_string());
        let _ = writeln!(log, "{},{},{},{test}", e.epoch, e.loss, e.train_accuracy);
    }
    out.write("train_log.csv", log)?;
    snapshot(cfg, out)?;
    Ok(report)
}

pub fn calibrate_cmd(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<NoiseLevels> {
    let data = Data::build(cfg)?;
    let model = pipeline::load_or_train(cfg, &data, out)?;
    let levels = pipeline::resolve_noise(cfg, &model, &data)?;
    write_levels(&levels, out)?;
    snapshot(cfg, out)?;
    Ok(levels)
}

fn write_levels(levels: &NoiseLevels, out: &mut OutDir) -> HarnessResult<()> {
    out.write("noise_levels.csv", levels.to_csv())?;
    if let Some(r) = &levels.ng_search {
        out.write("calibration_ng.csv", pipeline::trace_csv(r))?;
    }
    if let Some(r) = &levels.fg_search {
        out.write("calibration_fg.csv", pipeline::trace_csv(r))?;
    }
    Ok(())
}

/// Attributions of the first `n` test samples for every configured
/// enhancer, in `[sample][enhancer]` order.
fn attribute(
    cfg: &ExperimentConfig,
    model: &MlpModel,
    samples: &Dataset,
    explainer: &ExplainerSpec,
    levels: &NoiseLevels,
) -> HarnessResult<Vec<Vec<Attribution>>> {
    (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let (x, c) = (&samples.inputs()[i], samples.labels()[i]);
            cfg.enhancers
                .list
                .iter()
                .map(|&e| {
                    let ecfg = pipeline::enhancer_config(cfg, levels, e, sample_seed(cfg.run.seed, i));
                    Ok(enhance(e, model, x, c, explainer, &ecfg)?)
                })
                .collect()
        })
        .collect()
}

fn archive(samples: &Dataset, attrs: &[Vec<Attribution>]) -> Vec<u8> {
    let mut bytes = Vec::new();
    for (i, row) in attrs.iter().enumerate() {
        for a in row {
            bytes.extend(encode_attribution(&AttributionRecord {
                sample_id: i as u64,
                class_index: samples.labels()[i],
                attribution: a.clone(),
            }));
        }
    }
    bytes
}

pub fn explain(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<Vec<Vec<Attribution>>> {
    let data = Data::build(cfg)?;
    let model = pipeline::load_or_train(cfg, &data, out)?;
    let levels = pipeline::resolve_noise(cfg, &model, &data)?;
    let samples = data.head(cfg.run.samples)?;
    let explainer = pipeline::explainer(cfg, &data);
    let attrs = attribute(cfg, &model, &samples, &explainer, &levels)?;
    out.write("attributions.gnat", archive(&samples, &attrs))?;
    let shape = samples.sample_shape().to_vec();
    for a in &attrs[0] {
        let img = a.values.clone().reshape(image_shape(&shape))?;
        out.write(&format!("sample0_{}.pgm", a.enhancer.name()), encode_pgm(&img)?)?;
        out.write(&format!("sample0_{}.svg", a.enhancer.name()), encode_svg(&img, 16)?)?;
    }
    write_levels(&levels, out)?;
    snapshot(cfg, out)?;
    Ok(attrs)
}

fn image_shape(shape: &[usize]) -> Vec<usize> {
    match shape {
        [h, w] => vec![*h, *w],
        _ => vec![1, shape.iter().product()],
    }
}

/// One row of the comparison table.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub enhancer: Enhancer,
    pub metric: Metric,
    pub report: MetricReport,
    pub excluded: usize,
    pub bold: bool,
    /// Wilcoxon p-value against the best method; `None` for the best itself
    /// or when the test is not defined.
    pub p_vs_best: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PairTest {
    pub metric: Metric,
    pub a: Enhancer,
    pub b: Enhancer,
    pub result: Result<Wilcoxon, String>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub levels: NoiseLevels,
    /// `scores[enhancer][metric][sample]`, `None` where the metric is undefined.
    pub scores: Vec<Vec<Vec<Option<f64>>>>,
    pub summary: Vec<SummaryRow>,
    pub tests: Vec<PairTest>,
}

impl CompareOutcome {
    pub fn row(&self, enhancer: Enhancer, metric: Metric) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.enhancer == enhancer && r.metric == metric)
    }

    pub fn test(&self, metric: Metric, a: Enhancer, b: Enhancer) -> Option<&PairTest> {
        self.tests
            .iter()
            .find(|t| t.metric == metric && ((t.a, t.b) == (a, b) || (t.a, t.b) == (b, a)))
    }
}

fn paired(a: &[Option<f64>], b: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    a.iter().zip(b).filter_map(|(x, y)| Some(((*x)?, (*y)?))).unzip()
}

fn score(metric: Metric, r: gnlab_core::Result<f64>, sample: usize, enhancer: Enhancer) -> HarnessResult<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::UndefinedCorrelation(_) | Error::UndefinedSparseness)) => {
            log::warn!("{} undefined for sample {sample} ({}): {e}", metric.name(), enhancer.name());
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn compare(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<CompareOutcome> {
    let data = Data::build(cfg)?;
    let model = pipeline::load_or_train(cfg, &data, out)?;
    let levels = pipeline::resolve_noise(cfg, &model, &data)?;
    let samples = data.head(cfg.run.samples)?;
    let explainer = pipeline::explainer(cfg, &data);
    let metrics = &cfg.metrics.list;
    let masks = if metrics.contains(&Metric::Localization) {
        Some(masks_of(&samples)?)
    } else {
        None
    };
    let faith = FaithfulnessConfig {
        subset_size: cfg.metrics.faithfulness_subset,
        iterations: cfg.metrics.faithfulness_iterations,
        baseline_value: pipeline::faithfulness_baseline(cfg, &data),
    };
    let sens = SensitivityConfig {
        radius: cfg.metrics.sensitivity_radius,
        samples: cfg.metrics.sensitivity_samples,
    };
    let enhancers = &cfg.enhancers.list;
    let attrs = attribute(cfg, &model, &samples, &explainer, &levels)?;

    // per_sample[i][enhancer][metric]
    let per_sample: Vec<Vec<Vec<Option<f64>>>> = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let (x, c) = (&samples.inputs()[i], samples.labels()[i]);
            let base = sample_seed(cfg.run.seed, i);
            enhancers
                .iter()
                .zip(&attrs[i])
                .map(|(&e, a)| {
                    let ecfg = pipeline::enhancer_config(cfg, &levels, e, base);
                    metrics
                        .iter()
                        .map(|&m| {
                            let r = match m {
                                Metric::Localization => {
                                    relevance_rank_accuracy(&a.values, &masks.expect("checked above")[i])
                                }
                                Metric::Faithfulness => faithfulness_corr(
                                    &model,
                                    x,
                                    c,
                                    &a.values,
                                    &faith,
                                    mix(cfg.run.seed, purpose::FAITHFULNESS, i as u64),
                                ),
                                Metric::Robustness => max_sensitivity(
                                    |xx| Ok(enhance(e, &model, xx, c, &explainer, &ecfg)?.values),
                                    x,
                                    &sens,
                                    mix(cfg.run.seed, purpose::SENSITIVITY, i as u64),
                                ),
                                Metric::Sparseness => gini_index(&a.values),
                            };
                            score(m, r, i, e)
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<HarnessResult<_>>()?;

    let scores: Vec<Vec<Vec<Option<f64>>>> = (0..enhancers.len())
        .map(|ei| {
            (0..metrics.len())
                .map(|mi| per_sample.iter().map(|s| s[ei][mi]).collect())
                .collect()
        })
        .collect();

    let mut tests = Vec::new();
    for (mi, &m) in metrics.iter().enumerate() {
        for a in 0..enhancers.len() {
            for b in a + 1..enhancers.len() {
                let (sa, sb) = paired(&scores[a][mi], &scores[b][mi]);
                tests.push(PairTest {
                    metric: m,
                    a: enhancers[a],
                    b: enhancers[b],
                    result: wilcoxon_signed_rank(&sa, &sb).map_err(|e| e.to_string()),
                });
            }
        }
    }

    let mut summary = Vec::new();
    for (mi, &m) in metrics.iter().enumerate() {
        let mut rows = Vec::new();
        for (ei, &e) in enhancers.iter().enumerate() {
            let kept: Vec<f64> = scores[ei][mi].iter().flatten().copied().collect();
            let excluded = scores[ei][mi].len() - kept.len();
            if kept.is_empty() {
                log::warn!("{} has no defined scores for {}", m.name(), e.name());
                continue;
            }
            let config = format!("{:?}", pipeline::enhancer_config(cfg, &levels, e, 0));
            rows.push(SummaryRow {
                enhancer: e,
                metric: m,
                report: MetricReport::new(m.name(), kept, config)?,
                excluded,
                bold: false,
                p_vs_best: None,
            });
        }
        let better = |a: f64, b: f64| if m.higher_is_better() { a > b } else { a < b };
        let Some(best) = (0..rows.len()).reduce(|b, k| if better(rows[k].report.mean, rows[b].report.mean) { k } else { b })
        else {
            continue;
        };
        let best_e = rows[best].enhancer;
        for row in &mut rows {
            if row.enhancer == best_e {
                row.bold = true;
                continue;
            }
            let t = tests
                .iter()
                .find(|t| t.metric == m && ((t.a, t.b) == (best_e, row.enhancer) || (t.a, t.b) == (row.enhancer, best_e)))
                .expect("every pair was tested");
            row.p_vs_best = t.result.as_ref().ok().map(|w| w.p_value);
            row.bold = row.p_vs_best.is_none_or(|p| p >= SIGNIFICANCE);
        }
        summary.extend(rows);
    }

    let outcome = CompareOutcome {
        levels,
        scores,
        summary,
        tests,
    };
    write_compare(cfg, &outcome, &samples, &attrs, out)?;
    Ok(outcome)
}

fn write_compare(
    cfg: &ExperimentConfig,
    o: &CompareOutcome,
    samples: &Dataset,
    attrs: &[Vec<Attribution>],
    out: &mut OutDir,
) -> HarnessResult<()> {
    let method = cfg.explainer.method.name();
    let metrics = &cfg.metrics.list;
    let mut per = String::from("sample_id,method,enhancer,metric,score\n");
    for (ei, e) in cfg.enhancers.list.iter().enumerate() {
        for (mi, m) in metrics.iter().enumerate() {
            for (i, s) in o.scores[ei][mi].iter().enumerate() {
                let v = s.map_or("nan".to_string(), |v| v.to_string());
                let _ = writeln!(per, "{i},{method},{},{},{v}", e.name(), m.name());
            }
        }
    }
    out.write("per_sample.csv", per)?;

    let mut sum = String::from("method,enhancer,metric,n,excluded,mean,std,formatted,bold,p_vs_best\n");
    for r in &o.summary {
        let p = r.p_vs_best.map_or(String::new(), |p| p.to_string());
        let _ = writeln!(
            sum,
            "{method},{},{},{},{},{},{},{:.4} ± {:.4},{},{p}",
            r.enhancer.name(),
            r.metric.name(),
            r.report.scores.len(),
            r.excluded,
            r.report.mean,
            r.report.std,
            r.report.mean,
            r.report.std,
            r.bold
        );
    }
    out.write("summary.csv", sum)?;

    // Wide table: one row per enhancer, bold cells wrapped in `**`.
    let mut table = String::from("enhancer");
    for m in metrics {
        let arrow = if m.higher_is_better() { "up" } else { "down" };
        let _ = write!(table, ",{} ({arrow})", m.name());
    }
    table.push('\n');
    for e in &cfg.enhancers.list {
        table += e.name();
        for m in metrics {
            match o.row(*e, *m) {
                Some(r) => {
                    let cell = format!("{:.4} ± {:.4}", r.report.mean, r.report.std);
                    if r.bold {
                        let _ = write!(table, ",**{cell}**");
                    } else {
                        let _ = write!(table, ",{cell}");
                    }
                }
                None => table += ",",
            }
        }
        table.push('\n');
    }
    out.write("table.csv", table)?;

    let mut w = String::from("metric,enhancer_a,enhancer_b,n_used,w_plus,w_minus,z,p_value,significant,note\n");
    for t in &o.tests {
        let (a, b, m) = (t.a.name(), t.b.name(), t.metric.name());
        match &t.result {
            Ok(r) => {
                let _ = writeln!(
                    w,
                    "{m},{a},{b},{},{},{},{},{},{},",
                    r.n_used,
                    r.w_plus,
                    r.w_minus,
                    r.z,
                    r.p_value,
                    r.p_value < SIGNIFICANCE
                );
            }
            Err(note) => {
                let _ = writeln!(w, "{m},{a},{b},,,,,,false,{}", note.replace(',', ";"));
            }
        }
    }
    out.write("wilcoxon.csv", w)?;
    out.write("attributions.gnat", archive(samples, attrs))?;
    write_levels(&o.levels, out)?;
    snapshot(cfg, out)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub sigma_ng: Vec<f64>,
    pub sigma_sg: Vec<f64>,
    pub baseline_auc: f64,
    /// `auc[r][c]` for `sigma_sg[r]`, `sigma_ng[c]`.
    pub auc: Vec<Vec<f64>>,
    pub d_auc: Vec<Vec<f64>>,
}

impl SweepOutcome {
    /// Grid index `(r, c)` of the largest dAUC (first one on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (r, row) in self.d_auc.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > self.d_auc[best.0][best.1] {
                    best = (r, c);
                }
            }
        }
        best
    }
}

fn mean_auc(
    model: &MlpModel,
    samples: &Dataset,
    masks: &[Tensor],
    explainer: &ExplainerSpec,
    enhancer: Enhancer,
    make_cfg: impl Fn(usize) -> EnhancerConfig + Sync,
) -> HarnessResult<f64> {
    let aucs = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let a = enhance(enhancer, model, &samples.inputs()[i], samples.labels()[i], explainer, &make_cfg(i))?;
            Ok(ranking_auc(&a.values, &masks[i])?)
        })
        .collect::<HarnessResult<Vec<f64>>>()?;
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

pub fn sweep(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<SweepOutcome> {
    let data = Data::build(cfg)?;
    let model = pipeline::load_or_train(cfg, &data, out)?;
    let samples = data.head(cfg.run.samples)?;
    let masks = masks_of(&samples)?;
    let explainer = pipeline::explainer(cfg, &data);
    let e = &cfg.enhancers;
    let make = |sg: f64, ng: f64| {
        move |i: usize| EnhancerConfig {
            sigma_sg: sg,
            sigma_ng: ng,
            n_inputs: e.n_inputs,
            m_models: e.m_models,
            base_seed: sample_seed(cfg.run.seed, i),
            noise_scope: e.noise_scope,
            averaging: e.averaging,
            share_input_noise: e.share_input_noise,
        }
    };
    let baseline_auc = mean_auc(&model, &samples, masks, &explainer, Enhancer::None, make(0.0, 0.0))?;
    let (sng, ssg) = (&cfg.sweep.sigma_ng, &cfg.sweep.sigma_sg);
    let mut auc = Vec::new();
    let mut d = Vec::new();
    for &sg in ssg {
        let mut row = Vec::new();
        let mut drow = Vec::new();
        for &ng in sng {
            let v = mean_auc(&model, &samples, masks, &explainer, Enhancer::FusionGrad, make(sg, ng))?;
            log::info!("sweep sigma_sg={sg} sigma_ng={ng} auc={v:.5}");
            row.push(v);
            drow.push(gnlab_core::metrics::d_auc(v, baseline_auc)?);
        }
        auc.push(row);
        d.push(drow);
    }
    let o = SweepOutcome {
        sigma_ng: sng.clone(),
        sigma_sg: ssg.clone(),
        baseline_auc,
        auc,
        d_auc: d,
    };
    let mut csv = String::from("sigma_ng,sigma_sg,mean_auc,d_auc\n");
    for (r, sg) in o.sigma_sg.iter().enumerate() {
        for (c, ng) in o.sigma_ng.iter().enumerate() {
            let _ = writeln!(csv, "{ng},{sg},{},{}", o.auc[r][c], o.d_auc[r][c]);
        }
    }
    out.write("sweep.csv", csv)?;
    out.write(
        "sweep.svg",
        plot::heatmap("dAUC over the noise grid", "sigma_sg", ssg, "sigma_ng", sng, &o.d_auc),
    )?;
    snapshot(cfg, out)?;
    Ok(o)
}

#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub sigma: f64,
    pub acc: f64,
    pub drop: f64,
    pub mean_auc: f64,
}

/// `σ = 0` followed by `curve_points − 1` log-spaced levels.
pub fn curve_sigmas(points: usize) -> Vec<f64> {
    let mut s = vec![0.0];
    if points > 1 {
        let (a, b) = (GRID_LO.ln(), GRID_HI.ln());
        let k = points - 1;
        s.extend((0..k).map(|i| if k == 1 { GRID_LO } else { (a + (b - a) * i as f64 / (k - 1) as f64).exp() }));
    }
    s
}

pub fn heuristic_curve(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<Vec<CurvePoint>> {
    let data = Data::build(cfg)?;
    let model = pipeline::load_or_train(cfg, &data, out)?;
    let samples = data.head(cfg.run.samples)?;
    let masks = masks_of(&samples)?;
    let explainer = pipeline::explainer(cfg, &data);
    let cal = data.calibration_set(cfg)?;
    let probe = EnsembleProbe::new(&model, &cal, cfg.calibration.repeats, derive(cfg.run.seed, purpose::CALIBRATION))?
        .with_scope(cfg.enhancers.noise_scope);
    let levels0 = NoiseLevels {
        sigma_sg: 0.0,
        sigma_ng: 0.0,
        fg_sigma_sg: 0.0,
        fg_sigma_ng: 0.0,
        ng_search: None,
        fg_search: None,
        fg_source: "fixed",
    };
    let mut points = Vec::new();
    for sigma in curve_sigmas(cfg.sweep.curve_points) {
        let p = probe.evaluate(sigma)?;
        let levels = NoiseLevels {
            sigma_ng: sigma,
            ..levels0.clone()
        };
        let mean_auc = mean_auc(&model, &samples, masks, &explainer, Enhancer::NoiseGrad, |i| {
            pipeline::enhancer_config(cfg, &levels, Enhancer::NoiseGrad, sample_seed(cfg.run.seed, i))
        })?;
        log::info!("curve sigma={sigma:.5} drop={:.4} auc={mean_auc:.5}", p.drop);
        points.push(CurvePoint {
            sigma,
            acc: p.acc,
            drop: p.drop,
            mean_auc,
        });
    }
    let mut csv = String::from("sigma,acc,drop,mean_auc\n");
    for p in &points {
        let _ = writeln!(csv, "{},{},{},{}", p.sigma, p.acc, p.drop, p.mean_auc);
    }
    out.write("heuristic_curve.csv", csv)?;
    let series = [Series {
        name: "NoiseGrad",
        points: points.iter().map(|p| (p.drop, p.mean_auc)).collect(),
    }];
    out.write(
        "heuristic_curve.svg",
        plot::line_chart("Ranking AUC against accuracy drop", "accuracy drop", "mean AUC", &series, Some(0.05)),
    )?;
    snapshot(cfg, out)?;
    Ok(points)
}

pub fn sanity(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<SanityReport> {
    let data = Data::build(cfg)?;
    let model = pipeline::load_or_train(cfg, &data, out)?;
    let samples = data.head(cfg.metrics.sanity_samples.min(data.test.len()))?;
    let explainer = pipeline::explainer(cfg, &data);
    let pairs: Vec<(Tensor, usize)> = samples.inputs().iter().cloned().zip(samples.labels().iter().copied()).collect();
    let seed = derive(cfg.run.seed, purpose::SANITY);
    let report = sanity_randomization(
        &model,
        |m, x, c| Ok(explainer.explain(m, x, c, seed)?.values),
        &pairs,
        seed,
    )?;
    let mut csv = String::from("sample_id,spearman\n");
    for (i, r) in report.per_sample.iter().enumerate() {
        let _ = writeln!(csv, "{i},{}", r.map_or("nan".to_string(), |v| v.to_string()));
    }
    let _ = writeln!(csv, "mean,{}", report.mean_spearman);
    out.write("sanity.csv", csv)?;
    snapshot(cfg, out)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct AmOutcome {
    pub sigma_ng: f64,
    pub ensemble: AmResult,
    pub plain: AmResult,
}

pub fn am(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<AmOutcome> {
    let data = Data::build(cfg)?;
    let model = pipeline::load_or_train(cfg, &data, out)?;
    let a = &cfg.am;
    let (sigma_ng, search) = match a.sigma_ng {
        Some(s) => (s, None),
        None => {
            let r = calibrate_ng_level(cfg, &model, &data)?;
            (r.sigma, Some(r))
        }
    };
    let target = match (a.layer, a.unit) {
        (Some(layer), Some(unit)) => AmTarget::Neuron { layer, unit },
        _ => AmTarget::ClassLogit(a.class),
    };
    let am_cfg = AmConfig {
        target,
        steps: a.steps,
        step_size: a.step_size,
        box_lo: a.box_lo,
        box_hi: a.box_hi,
        l2_penalty: a.l2,
        jitter_std: a.jitter,
        m_models: a.m_models,
        sigma_ng,
        seed: derive(cfg.run.seed, purpose::AM),
        noise_scope: cfg.enhancers.noise_scope,
        resample_per_step: a.resample,
    };
    let ensemble = activation_maximize(&model, &am_cfg)?;
    let plain = plain_activation_maximize(&model, &am_cfg)?;
    let mut csv = String::from("step,objective,plain_objective\n");
    for (t, (j, p)) in ensemble.objective_trace.iter().zip(&plain.objective_trace).enumerate() {
        let _ = writeln!(csv, "{t},{j},{p}");
    }
    out.write("am_trace.csv", csv)?;
    let shape = image_shape(data.test.sample_shape());
    for (name, r) in [("am", &ensemble), ("am_plain", &plain)] {
        let img = r.x_star.clone().reshape(shape.clone())?;
        out.write(&format!("{name}.pgm"), encode_pgm(&img)?)?;
        out.write(&format!("{name}.svg"), encode_svg(&img, 16)?)?;
    }
    if let Some(r) = &search {
        out.write("calibration_ng.csv", pipeline::trace_csv(r))?;
    }
    snapshot(cfg, out)?;
    Ok(AmOutcome {
        sigma_ng,
        ensemble,
        plain,
    })
}

fn calibrate_ng_level(cfg: &ExperimentConfig, model: &MlpModel, data: &Data) -> HarnessResult<CalibrationResult> {
    let cal = data.calibration_set(cfg)?;
    let probe = EnsembleProbe::new(model, &cal, cfg.calibration.repeats, derive(cfg.run.seed, purpose::CALIBRATION))?
        .with_scope(cfg.enhancers.noise_scope);
    Ok(calibrate(&probe, cfg.enhancers.target_drop, cfg.enhancers.tol)?)
}

/// Signed gradient arrows behind each enhancer at one point.
#[derive(Debug, Clone)]
pub struct ArrowSet {
    pub enhancer: Enhancer,
    pub samples: Vec<[f64; 2]>,
    pub mean: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct ToyOutcome {
    pub test_accuracy: f64,
    pub point: [f64; 2],
    pub class_index: usize,
    pub levels: NoiseLevels,
    pub arrows: Vec<ArrowSet>,
    /// Largest gap between `|mean arrow|` and the pre-abs enhancer output.
    pub mean_arrow_error: f64,
    /// How many of 10 perturbed models classify the point differently.
    pub flipped: usize,
}

const TOY_GRID: usize = 15;
const TOY_CROSSING_MODELS: usize = 10;

fn toy_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    if c.dataset.kind != DatasetKind::Toy {
        let d = ToyGaussSpec::default();
        c.dataset.kind = DatasetKind::Toy;
        c.dataset.n_train = d.n_train;
        c.dataset.n_test = d.n_test;
    }
    c
}

/// Terms that the enhancer averages, as signed input gradients.
fn gradient_terms(model: &MlpModel, x: &Tensor, c: usize, e: Enhancer, ecfg: &EnhancerConfig) -> HarnessResult<Vec<Tensor>> {
    let noisy = |j: usize| noisy_input(x, ecfg.sigma_sg, mix(ecfg.base_seed, stream::INPUT_NOISE, j as u64));
    let mut terms = Vec::new();
    match e {
        Enhancer::None => terms.push(model.grad_input(x, c)?),
        Enhancer::SmoothGrad => {
            for j in 0..ecfg.n_inputs {
                terms.push(model.grad_input(&noisy(j), c)?);
            }
        }
        Enhancer::NoiseGrad => {
            for m in ensemble_stream(model, ecfg) {
                terms.push(m?.grad_input(x, c)?);
            }
        }
        Enhancer::FusionGrad => {
            for m in ensemble_stream(model, ecfg) {
                let m = m?;
                for j in 0..ecfg.n_inputs {
                    terms.push(m.grad_input(&noisy(j), c)?);
                }
            }
        }
    }
    Ok(terms)
}

fn mean_of(terms: &[Tensor]) -> Vec<f64> {
    let mut m = RunningMean::new(terms[0].len());
    for t in terms {
        m.push(t.data());
    }
    m.finish()
}

/// Toy experiment: arrows at the test point nearest the decision boundary,
/// gradient fields over a grid, and a boundary-crossing count.
pub fn toy(cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<ToyOutcome> {
    let cfg = &toy_config(cfg);
    let data = Data::build(cfg)?;
    let (model, _) = pipeline::train_model(cfg, &data)?;
    let test_accuracy = model.accuracy(&data.test)?;
    out.write("toy_model.ckpt", gnlab_core::nn::encode_checkpoint(&model))?;
    let levels = pipeline::resolve_noise(cfg, &model, &data)?;

    let margin = |x: &Tensor| -> HarnessResult<f64> {
        let l = model.forward(x)?;
        Ok((l.data()[0] - l.data()[1]).abs())
    };
    let mut best = 0;
    let mut best_margin = f64::INFINITY;
    for (i, x) in data.test.inputs().iter().enumerate() {
        let m = margin(x)?;
        if m < best_margin {
            best_margin = m;
            best = i;
        }
    }
    let x = &data.test.inputs()[best];
    let c = model.predict(x)?;
    let base = derive(cfg.run.seed, purpose::TOY);
    let pre_abs = |e: Enhancer, base_seed: u64| EnhancerConfig {
        averaging: Averaging::PreAbs,
        share_input_noise: true,
        ..pipeline::enhancer_config(cfg, &levels, e, base_seed)
    };

    let mut arrows = Vec::new();
    let mut mean_arrow_error: f64 = 0.0;
    for e in Enhancer::ALL {
        let ecfg = pre_abs(e, base);
        let terms = gradient_terms(&model, x, c, e, &ecfg)?;
        let mean = mean_of(&terms);
        let reference = enhance(e, &model, x, c, &ExplainerSpec::Saliency, &ecfg)?;
        for (m, r) in mean.iter().zip(reference.values.data()) {
            mean_arrow_error = mean_arrow_error.max((m.abs() - r).abs());
        }
        arrows.push(ArrowSet {
            enhancer: e,
            samples: terms.iter().map(|t| [t.data()[0], t.data()[1]]).collect(),
            mean: [mean[0], mean[1]],
        });
    }

    let mut flipped = 0;
    for i in 0..TOY_CROSSING_MODELS {
        let m = perturbed_member(&model, levels.sigma_ng, base, cfg.enhancers.noise_scope, i)?;
        flipped += usize::from(m.predict(x)? != c);
    }

    let mut csv = String::from("enhancer,kind,index,x,y,dx,dy\n");
    for a in &arrows {
        for (k, v) in a.samples.iter().enumerate() {
            let _ = writeln!(csv, "{},sample,{k},{},{},{},{}", a.enhancer.name(), x.data()[0], x.data()[1], v[0], v[1]);
        }
        let _ = writeln!(csv, "{},mean,0,{},{},{},{}", a.enhancer.name(), x.data()[0], x.data()[1], a.mean[0], a.mean[1]);
    }
    out.write("toy_arrows.csv", csv)?;

    let bounds = Bounds::of(data.test.inputs().iter().chain(data.train.inputs()).map(|p| (p.data()[0], p.data()[1])));
    let dots: Vec<(f64, f64, &str)> = data
        .test
        .inputs()
        .iter()
        .zip(data.test.labels())
        .map(|(p, &y)| (p.data()[0], p.data()[1], plot::PALETTE[4 + y % 2]))
        .collect();
    let longest = arrows
        .iter()
        .flat_map(|a| a.samples.iter().chain(std::iter::once(&a.mean)))
        .map(|v| v[0].hypot(v[1]))
        .fold(0.0, f64::max);
    let scale = if longest > 0.0 { 0.25 * (bounds.x1 - bounds.x0) / longest } else { 1.0 };
    let mut svg_arrows = Vec::new();
    for (k, a) in arrows.iter().enumerate() {
        let color = plot::PALETTE[k];
        for v in &a.samples {
            svg_arrows.push(Arrow { x: x.data()[0], y: x.data()[1], dx: v[0], dy: v[1], color, width: 0.5 });
        }
        svg_arrows.push(Arrow { x: x.data()[0], y: x.data()[1], dx: a.mean[0], dy: a.mean[1], color, width: 2.5 });
    }
    out.write(
        "toy_arrows.svg",
        plot::arrows("Explanation arrows: baseline, sg, ng, fg", bounds, &dots, &svg_arrows, scale),
    )?;

    // Gradient fields of the class-1 logit.
    let grid: Vec<Tensor> = (0..TOY_GRID * TOY_GRID)
        .map(|k| {
            let (r, q) = (k / TOY_GRID, k % TOY_GRID);
            let t = |i: usize| i as f64 / (TOY_GRID - 1) as f64;
            Tensor::from_vec(vec![
                bounds.x0 + t(q) * (bounds.x1 - bounds.x0),
                bounds.y0 + t(r) * (bounds.y1 - bounds.y0),
            ])
        })
        .collect();
    let mut field_csv = String::from("enhancer,x,y,gx,gy\n");
    for e in [Enhancer::None, Enhancer::SmoothGrad, Enhancer::NoiseGrad] {
        let field = grid
            .par_iter()
            .enumerate()
            .map(|(k, p)| {
                let terms = gradient_terms(&model, p, 1, e, &pre_abs(e, mix(base, purpose::TOY, k as u64)))?;
                Ok(mean_of(&terms))
            })
            .collect::<HarnessResult<Vec<_>>>()?;
        let longest = field.iter().map(|g| g[0].hypot(g[1])).fold(0.0, f64::max);
        let cell = (bounds.x1 - bounds.x0) / (TOY_GRID - 1) as f64;
        let scale = if longest > 0.0 { 0.9 * cell / longest } else { 1.0 };
        let mut svg = Vec::new();
        for (p, g) in grid.iter().zip(&field) {
            let _ = writeln!(field_csv, "{},{},{},{},{}", e.name(), p.data()[0], p.data()[1], g[0], g[1]);
            svg.push(Arrow { x: p.data()[0], y: p.data()[1], dx: g[0], dy: g[1], color: "#333333", width: 1.0 });
        }
        out.write(
            &format!("toy_field_{}.svg", e.name()),
            plot::arrows(&format!("Gradient field ({})", e.name()), bounds, &dots, &svg, scale),
        )?;
    }
    out.write("toy_field.csv", field_csv)?;

    let mut summary = String::from("key,value\n");
    let _ = writeln!(summary, "test_accuracy,{test_accuracy}");
    let _ = writeln!(summary, "point_x,{}\npoint_y,{}", x.data()[0], x.data()[1]);
    let _ = writeln!(summary, "class_index,{c}\nsigma_sg,{}\nsigma_ng,{}", levels.sigma_sg, levels.sigma_ng);
    let _ = writeln!(summary, "flipped_of_{TOY_CROSSING_MODELS},{flipped}\nmean_arrow_error,{mean_arrow_error}");
    out.write("toy_summary.csv", summary)?;
    snapshot(cfg, out)?;
    Ok(ToyOutcome {
        test_accuracy,
        point: [x.data()[0], x.data()[1]],
        class_index: c,
        levels,
        arrows,
        mean_arrow_error,
        flipped,
    })
}
