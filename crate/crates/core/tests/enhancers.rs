mod common;

use common::{he_model, naive_grad, random_input, random_model};
use gnlab_core::enhance::{
    enhance, ensemble_stream, materialize_ensemble, noisy_input, perturbed_member, Averaging, EnhancerConfig,
};
use gnlab_core::explain::{Enhancer, ExplainerSpec};
use gnlab_core::nn::{MlpModel, NoiseScope};
use gnlab_core::seed::{mix, stream};
use gnlab_core::Tensor;

fn cfg(sigma_sg: f64, sigma_ng: f64, seed: u64) -> EnhancerConfig {
    EnhancerConfig {
        sigma_sg,
        sigma_ng,
        n_inputs: 6,
        m_models: 5,
        base_seed: seed,
        ..Default::default()
    }
}

fn specs() -> Vec<ExplainerSpec> {
    vec![
        ExplainerSpec::Saliency,
        ExplainerSpec::IntegratedGradients { steps: 16, baseline: None },
        ExplainerSpec::GradientShap {
            samples: 4,
            pool: vec![Tensor::zeros(&[8]), random_input(8, 3)],
            sigma: None,
        },
        ExplainerSpec::Occlusion { patch: 2, fill: 0.0 },
        ExplainerSpec::LrpGamma { gamma: 0.25 },
    ]
}

#[test]
fn degenerate_noise_reduces_bitwise() {
    let model = he_model(&[8, 12, 3], 1, 0.1);
    let x = random_input(8, 2);
    for spec in specs() {
        for averaging in [Averaging::PostAbs, Averaging::PreAbs] {
            let with = |sg, ng| EnhancerConfig { averaging, ..cfg(sg, ng, 77) };
            let base = enhance(Enhancer::None, &model, &x, 1, &spec, &with(0.0, 0.0)).unwrap().values;
            let sg0 = enhance(Enhancer::SmoothGrad, &model, &x, 1, &spec, &with(0.0, 0.3)).unwrap().values;
            let ng0 = enhance(Enhancer::NoiseGrad, &model, &x, 1, &spec, &with(0.3, 0.0)).unwrap().values;
            let fg00 = enhance(Enhancer::FusionGrad, &model, &x, 1, &spec, &with(0.0, 0.0)).unwrap().values;
            assert!(sg0.bits_eq(&base), "{spec:?}");
            assert!(ng0.bits_eq(&base), "{spec:?}");
            assert!(fg00.bits_eq(&base), "{spec:?}");

            let sg = enhance(Enhancer::SmoothGrad, &model, &x, 1, &spec, &with(0.3, 0.2)).unwrap().values;
            let fg_sg = enhance(Enhancer::FusionGrad, &model, &x, 1, &spec, &with(0.3, 0.0)).unwrap().values;
            assert!(fg_sg.bits_eq(&sg), "{spec:?}");
            let ng = enhance(Enhancer::NoiseGrad, &model, &x, 1, &spec, &with(0.3, 0.2)).unwrap().values;
            let fg_ng = enhance(Enhancer::FusionGrad, &model, &x, 1, &spec, &with(0.0, 0.2)).unwrap().values;
            assert!(fg_ng.bits_eq(&ng), "{spec:?}");
        }
    }
}

#[test]
fn smoothgrad_of_linear_model_is_abs_weights() {
    let model = random_model(&[8, 3], 5, true);
    let x = random_input(8, 6);
    let a = enhance(Enhancer::SmoothGrad, &model, &x, 2, &ExplainerSpec::Saliency, &cfg(0.5, 0.0, 1)).unwrap();
    for (v, w) in a.values.data().iter().zip(&model.layers()[0].weight.data()[16..24]) {
        assert!((v - w.abs()).abs() < 1e-15);
    }
}

/// Mean per-feature variance of an enhancer output over `runs` base seeds.
fn spread(model: &MlpModel, x: &Tensor, enhancer: Enhancer, c: EnhancerConfig, runs: u64) -> f64 {
    let outs: Vec<Vec<f64>> = (0..runs)
        .map(|r| {
            let c = EnhancerConfig { base_seed: mix(500, 0, r), ..c };
            enhance(enhancer, model, x, 0, &ExplainerSpec::Saliency, &c).unwrap().values.into_data()
        })
        .collect();
    let d = outs[0].len();
    (0..d)
        .map(|k| {
            let m = outs.iter().map(|o| o[k]).sum::<f64>() / runs as f64;
            outs.iter().map(|o| (o[k] - m).powi(2)).sum::<f64>() / (runs - 1) as f64
        })
        .sum::<f64>()
        / d as f64
}

/// Least-squares slope of log variance against log sample count.
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn noisegrad_variance_falls_as_one_over_m() {
    let model = he_model(&[10, 16, 8, 3], 9, 0.1);
    let x = random_input(10, 10);
    let pts: Vec<(f64, f64)> = [4usize, 16, 64, 256]
        .iter()
        .map(|&m| {
            let c = EnhancerConfig { m_models: m, ..cfg(0.0, 0.2, 0) };
            (m as f64, spread(&model, &x, Enhancer::NoiseGrad, c, 50))
        })
        .collect();
    let slope = log_slope(&pts);
    assert!((-1.25..=-0.75).contains(&slope), "slope {slope}, points {pts:?}");
}

#[test]
fn smoothgrad_variance_falls_as_one_over_n() {
    let model = he_model(&[10, 16, 8, 3], 11, 0.1);
    let x = random_input(10, 12);
    let pts: Vec<(f64, f64)> = [4usize, 16, 64]
        .iter()
        .map(|&n| {
            let c = EnhancerConfig { n_inputs: n, ..cfg(0.3, 0.0, 0) };
            (n as f64, spread(&model, &x, Enhancer::SmoothGrad, c, 50))
        })
        .collect();
    let slope = log_slope(&pts);
    assert!((-1.25..=-0.75).contains(&slope), "slope {slope}, points {pts:?}");
}

#[test]
fn weight_noise_has_unit_mean() {
    let model = random_model(&[3, 2], 13, true);
    let sigma = 0.3;
    let m = 10_000;
    let w0 = model.layers()[0].weight.data()[0];
    let b0 = model.layers()[0].bias.data()[1];
    let (mut sw, mut sb) = (0.0, 0.0);
    for i in 0..m {
        let p = perturbed_member(&model, sigma, 4, NoiseScope::WeightsAndBiases, i).unwrap();
        sw += p.layers()[0].weight.data()[0] / w0;
        sb += p.layers()[0].bias.data()[1] / b0;
    }
    let se = sigma / (m as f64).sqrt();
    assert!((sw / m as f64 - 1.0).abs() < 3.0 * se, "weight eta mean {}", sw / m as f64);
    assert!((sb / m as f64 - 1.0).abs() < 3.0 * se, "bias eta mean {}", sb / m as f64);
}

#[test]
fn weights_only_scope_leaves_biases() {
    let model = random_model(&[4, 3, 2], 14, true);
    let p = perturbed_member(&model, 0.5, 1, NoiseScope::WeightsOnly, 0).unwrap();
    for (a, b) in p.layers().iter().zip(model.layers()) {
        assert!(a.bias.bits_eq(&b.bias));
        assert!(!a.weight.bits_eq(&b.weight));
    }
}

/// Double loop straight from the definition, gradients from the oracle.
fn fusiongrad_oracle(model: &MlpModel, x: &Tensor, c: usize, cfg: &EnhancerConfig) -> Vec<f64> {
    let mut acc = vec![0.0; x.len()];
    for i in 0..cfg.m_models {
        let w = perturbed_member(model, cfg.sigma_ng, cfg.base_seed, cfg.noise_scope, i).unwrap();
        for j in 0..cfg.n_inputs {
            let s = if cfg.share_input_noise {
                mix(cfg.base_seed, stream::INPUT_NOISE, j as u64)
            } else {
                mix(mix(cfg.base_seed, stream::INPUT_NOISE_PER_MODEL, i as u64), stream::INPUT_NOISE, j as u64)
            };
            let xi = noisy_input(x, cfg.sigma_sg, s);
            for (a, g) in acc.iter_mut().zip(naive_grad(&w, xi.data(), c)) {
                *a += match cfg.averaging {
                    Averaging::PostAbs => g.abs(),
                    Averaging::PreAbs => g,
                };
            }
        }
    }
    let n = (cfg.m_models * cfg.n_inputs) as f64;
    acc.iter().map(|v| (v / n).abs()).collect()
}

#[test]
fn fusiongrad_matches_double_loop() {
    let model = he_model(&[8, 12, 6, 3], 15, 0.1);
    let x = random_input(8, 16);
    for share in [true, false] {
        for averaging in [Averaging::PostAbs, Averaging::PreAbs] {
            let c = EnhancerConfig { share_input_noise: share, averaging, ..cfg(0.2, 0.1, 99) };
            let got = enhance(Enhancer::FusionGrad, &model, &x, 2, &ExplainerSpec::Saliency, &c).unwrap();
            let want = fusiongrad_oracle(&model, &x, 2, &c);
            for (a, b) in got.values.data().iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "share {share} {averaging:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn stream_and_materialized_ensembles_agree() {
    let model = he_model(&[5, 4, 2], 17, 0.1);
    let c = EnhancerConfig { m_models: 7, ..cfg(0.0, 0.3, 5) };
    let all = materialize_ensemble(&model, &c).unwrap();
    let streamed: Vec<MlpModel> = ensemble_stream(&model, &c).map(Result::unwrap).collect();
    assert_eq!(all.len(), 7);
    for (a, b) in all.iter().zip(&streamed) {
        assert!(a.bits_eq(b));
    }
    // Members do not depend on M.
    let more = materialize_ensemble(&model, &EnhancerConfig { m_models: 9, ..c }).unwrap();
    assert!(more[..7].iter().zip(&all).all(|(a, b)| a.bits_eq(b)));
}

#[test]
fn zero_counts_are_rejected() {
    let model = he_model(&[5, 4, 2], 18, 0.1);
    let x = random_input(5, 1);
    let bad = EnhancerConfig { n_inputs: 0, ..cfg(0.1, 0.0, 0) };
    assert!(enhance(Enhancer::SmoothGrad, &model, &x, 0, &ExplainerSpec::Saliency, &bad).is_err());
    let bad = EnhancerConfig { sigma_ng: -1.0, ..cfg(0.0, 0.0, 0) };
    assert!(enhance(Enhancer::NoiseGrad, &model, &x, 0, &ExplainerSpec::Saliency, &bad).is_err());
}
