mod common;

use common::{he_model, naive_grad, naive_logit, random_input, random_model};
use gnlab_core::explain::{gradshap_signed, intgrad_signed, lrp_gamma_relevances, occlusion_signed, ExplainerSpec};
use gnlab_core::nn::{Activation, Layer, MlpModel};
use gnlab_core::seed::{self, mix, stream};
use gnlab_core::Tensor;
use rand::Rng;
use rand_distr::StandardNormal;

fn hand_net() -> MlpModel {
    let l1 = Layer::new(
        Tensor::new(vec![2, 2], vec![1.0, 2.0, 2.0, -1.0]).unwrap(),
        Tensor::zeros(&[2]),
        Activation::Relu,
    )
    .unwrap();
    let l2 = Layer::new(Tensor::new(vec![1, 2], vec![1.0, -1.0]).unwrap(), Tensor::zeros(&[1]), Activation::Identity).unwrap();
    MlpModel::new(vec![l1, l2]).unwrap()
}

// Worked by hand: hidden activations (3, 1), output 2.
#[test]
fn lrp_hand_network() {
    let x = Tensor::from_vec(vec![1.0, 1.0]);
    let r0 = lrp_gamma_relevances(&hand_net(), &x, 0, 0.0).unwrap();
    let r1 = lrp_gamma_relevances(&hand_net(), &x, 0, 1.0).unwrap();
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(p, q)| (p - q).abs() < 1e-7);
    assert!(close(&r0[1], &[3.0, -1.0]), "{:?}", r0[1]);
    assert!(close(&r0[0], &[-1.0, 3.0]), "{:?}", r0[0]);
    assert!(close(&r1[1], &[2.4, -0.4]), "{:?}", r1[1]);
    assert!(close(&r1[0], &[4.0 / 15.0, 26.0 / 15.0]), "{:?}", r1[0]);
}

#[test]
fn lrp_conserves_relevance_without_biases() {
    for case in 0..20u64 {
        let model = random_model(&[10, 8, 6, 3], mix(21, 0, case), false);
        let mut rng = seed::rng(mix(21, 1, case));
        let x = Tensor::from_vec((0..10).map(|_| rng.random_range(0.0..1.0)).collect());
        let c = (case % 3) as usize;
        let f = naive_logit(&model, x.data(), c);
        for gamma in [0.0, 0.25, 1.0] {
            let layers = lrp_gamma_relevances(&model, &x, c, gamma).unwrap();
            for (l, r) in layers.iter().enumerate() {
                let s: f64 = r.iter().sum();
                assert!((s - f).abs() <= 1e-6 * f.abs().max(1e-12), "case {case} gamma {gamma} layer {l}: {s} vs {f}");
            }
        }
    }
}

// Along the straight path the integrand is piecewise constant, so each ReLU
// kink crossed costs up to half a step of error. Check the rate, not a fixed
// tolerance at one step count.
#[test]
fn integrated_gradients_completeness_converges() {
    let mut worst = [0.0f64; 3];
    for case in 0..20u64 {
        let model = he_model(&[8, 16, 8, 3], mix(31, 0, case), 0.1);
        let x = random_input(8, mix(31, 1, case));
        let c = (case % 3) as usize;
        let gap = naive_logit(&model, x.data(), c) - naive_logit(&model, &[0.0; 8], c);
        for (k, steps) in [64, 256, 4096].into_iter().enumerate() {
            let ig = intgrad_signed(&model, &x, c, steps, None).unwrap();
            worst[k] = worst[k].max((ig.sum() - gap).abs());
        }
    }
    assert!(worst[0] < 5e-2 && worst[1] < 1e-2 && worst[2] < 1e-3, "{worst:?}");
    assert!(worst[2] < worst[0] / 16.0, "{worst:?}");
}

#[test]
fn integrated_gradients_exact_without_kinks() {
    // Bias-free ReLU nets are positively homogeneous: no kink on the ray from 0.
    for case in 0..5u64 {
        let model = random_model(&[6, 8, 3], mix(32, 0, case), false);
        let x = random_input(6, mix(32, 1, case));
        let ig = intgrad_signed(&model, &x, 0, 7, None).unwrap();
        assert!((ig.sum() - naive_logit(&model, x.data(), 0)).abs() < 1e-12);
    }
}

#[test]
fn integrated_gradients_on_linear_model_is_exact() {
    let model = random_model(&[4, 2], 5, true);
    let x = random_input(4, 6);
    let b = random_input(4, 7);
    let ig = intgrad_signed(&model, &x, 1, 3, Some(&b)).unwrap();
    let w = &model.layers()[0].weight.data()[4..8];
    for j in 0..4 {
        assert!((ig.data()[j] - (x.data()[j] - b.data()[j]) * w[j]).abs() < 1e-12);
    }
}

/// Same draws as the documented scheme, gradients from the plain-loop oracle.
fn gradshap_oracle(model: &MlpModel, x: &[f64], c: usize, samples: usize, pool: &[Vec<f64>], sigma: f64, seed_v: u64) -> Vec<f64> {
    let mut acc = vec![0.0; x.len()];
    for j in 0..samples {
        let mut rng = seed::rng(mix(seed_v, stream::GRADSHAP, j as u64));
        let b = &pool[rng.random_range(0..pool.len())];
        let u: f64 = rng.random();
        let p: Vec<f64> = (0..x.len())
            .map(|k| b[k] + u * (x[k] - b[k]) + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let g = naive_grad(model, &p, c);
        for k in 0..x.len() {
            acc[k] += (x[k] - b[k]) * g[k];
        }
    }
    acc.iter().map(|v| v / samples as f64).collect()
}

#[test]
fn gradshap_matches_naive_oracle() {
    let model = random_model(&[6, 7, 3], 41, true);
    let x = random_input(6, 42);
    let pool: Vec<Tensor> = (0..4).map(|k| random_input(6, 50 + k)).collect();
    let raw: Vec<Vec<f64>> = pool.iter().map(|t| t.data().to_vec()).collect();
    let got = gradshap_signed(&model, &x, 2, 32, &pool, None, 1234).unwrap();
    let sigma = 0.1 * (x.max() - x.min());
    let want = gradshap_oracle(&model, x.data(), 2, 32, &raw, sigma, 1234);
    for (a, b) in got.data().iter().zip(&want) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn gradshap_is_seeded() {
    let model = random_model(&[5, 4, 2], 3, true);
    let x = random_input(5, 4);
    let spec = ExplainerSpec::GradientShap {
        samples: 8,
        pool: vec![Tensor::zeros(&[5]), random_input(5, 9)],
        sigma: Some(0.2),
    };
    let a = spec.explain_signed(&model, &x, 0, 1).unwrap();
    let b = spec.explain_signed(&model, &x, 0, 1).unwrap();
    let c = spec.explain_signed(&model, &x, 0, 2).unwrap();
    assert!(a.bits_eq(&b));
    assert!(!a.bits_eq(&c));
}

#[test]
fn saliency_matches_naive_backprop() {
    for case in 0..10u64 {
        let model = random_model(&[9, 6, 5, 4], mix(61, 0, case), true);
        let x = random_input(9, mix(61, 1, case));
        let g = model.grad_input(&x, 3).unwrap();
        for (a, b) in g.data().iter().zip(naive_grad(&model, x.data(), 3)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn occlusion_matches_patchwise_drop() {
    let model = random_model(&[16, 8, 2], 71, true);
    let x = random_input(16, 72).reshape(vec![4, 4]).unwrap();
    let att = occlusion_signed(&model, &x, 1, 2, 0.0).unwrap();
    let f = naive_logit(&model, x.data(), 1);
    for (r0, c0) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
        let mut p = x.data().to_vec();
        let cells: Vec<usize> = (r0..r0 + 2).flat_map(|r| (c0..c0 + 2).map(move |c| r * 4 + c)).collect();
        for &i in &cells {
            p[i] = 0.0;
        }
        let drop = f - naive_logit(&model, &p, 1);
        for &i in &cells {
            assert!((att.data()[i] - drop).abs() < 1e-12);
        }
    }
}
