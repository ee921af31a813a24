use gnlab_core::metrics::{
    gini_index, pearson, ranking_auc, relevance_rank_accuracy, spearman, wilcoxon_signed_rank,
};
use gnlab_core::seed;
use gnlab_core::Tensor;
use proptest::prelude::*;
use rand::Rng;

/// `G = Σ_i Σ_j |e_i − e_j| / (2 n² mean)`.
fn gini_oracle(v: &[f64]) -> f64 {
    let e: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let n = e.len() as f64;
    let mean = e.iter().sum::<f64>() / n;
    let mut s = 0.0;
    for a in &e {
        for b in &e {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * mean)
}

#[test]
fn gini_matches_mean_absolute_difference() {
    let mut rng = seed::rng(1);
    for case in 0..200 {
        let n = rng.random_range(1..300);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = gini_index(&Tensor::from_vec(v.clone())).unwrap();
        let want = gini_oracle(&v);
        assert!((got - want).abs() < 1e-12, "case {case}: {got} vs {want}");
    }
}

#[test]
fn gini_extremes() {
    assert_eq!(gini_index(&Tensor::from_vec(vec![0.4; 64])).unwrap(), 0.0);
    let mut one_hot = vec![0.0; 64];
    one_hot[7] = -2.0;
    let g = gini_index(&Tensor::from_vec(one_hot)).unwrap();
    assert!((g - 63.0 / 64.0).abs() < 1e-15);
    assert!(gini_index(&Tensor::zeros(&[8])).is_err());
}

/// Two-sided exact p-value of W+ by enumerating every sign pattern of the
/// ranks 1..=n.
fn exact_wilcoxon_p(n: usize, w_plus: f64) -> f64 {
    let mean = (n * (n + 1)) as f64 / 4.0;
    let dev = (w_plus - mean).abs();
    let mut extreme = 0u64;
    for mask in 0u32..(1 << n) {
        let mut w = 0u32;
        let mut m = mask;
        while m != 0 {
            w += m.trailing_zeros() + 1;
            m &= m - 1;
        }
        if (f64::from(w) - mean).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

#[test]
fn wilcoxon_matches_exact_enumeration() {
    let mut rng = seed::rng(2);
    let mut worst: f64 = 0.0;
    for shift in [0.0, 0.1, 0.25, 0.4, 0.6] {
        let a: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| v + shift + rng.random_range(-0.5..0.5)).collect();
        let w = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(w.n_used, 20);
        let exact = exact_wilcoxon_p(20, w.w_plus);
        worst = worst.max((w.p_value - exact).abs());
    }
    assert!(worst < 0.02, "max p difference {worst}");
}

#[test]
fn wilcoxon_rank_sums_add_up() {
    let a: Vec<f64> = (0..25).map(|i| (i as f64).sin()).collect();
    let b: Vec<f64> = (0..25).map(|i| (i as f64 * 1.3).cos()).collect();
    let w = wilcoxon_signed_rank(&a, &b).unwrap();
    assert_eq!(w.w_plus + w.w_minus, 25.0 * 26.0 / 2.0);
    let swapped = wilcoxon_signed_rank(&b, &a).unwrap();
    assert_eq!(swapped.w_plus, w.w_minus);
    assert!((swapped.p_value - w.p_value).abs() < 1e-15);
}

#[test]
fn auc_degenerate_values_are_exact() {
    let mask = Tensor::from_vec(vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    let perfect = Tensor::from_vec(vec![5.0, 1.0, 4.0, 0.0, 2.0, 3.0]);
    let inverted = perfect.map(|v| -v);
    assert_eq!(ranking_auc(&perfect, &mask).unwrap(), 1.0);
    assert_eq!(ranking_auc(&inverted, &mask).unwrap(), 0.0);
    assert_eq!(ranking_auc(&Tensor::filled(&[6], 0.3), &mask).unwrap(), 0.5);
}

fn mask_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (4usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(prop::bool::ANY, n).prop_filter("both labels", |m| {
                m.iter().any(|&b| b) && m.iter().any(|&b| !b)
            }),
        )
            .prop_map(|(a, m)| (a, m.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect()))
    })
}

proptest! {
    #[test]
    fn localization_is_invariant_under_monotone_maps((attr, mask) in mask_strategy(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let a = Tensor::from_vec(attr);
        let m = Tensor::from_vec(mask);
        let t = a.map(|v| (scale * v + shift).exp().ln_1p());
        prop_assert_eq!(relevance_rank_accuracy(&a, &m).unwrap(), relevance_rank_accuracy(&t, &m).unwrap());
        prop_assert!((ranking_auc(&a, &m).unwrap() - ranking_auc(&t, &m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gini_is_scale_invariant(v in prop::collection::vec(-5.0f64..5.0, 2..60), k in 0.01f64..100.0) {
        prop_assume!(v.iter().any(|x| *x != 0.0));
        let a = gini_index(&Tensor::from_vec(v.clone())).unwrap();
        let b = gini_index(&Tensor::from_vec(v.iter().map(|x| -k * x).collect())).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_affine_invariant(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..50), k in 0.1f64..10.0, c in -3.0f64..3.0) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(r) = pearson(&a, &b) {
            let t: Vec<f64> = a.iter().map(|v| k * v + c).collect();
            prop_assert!((pearson(&t, &b).unwrap() - r).abs() < 1e-9);
            let n: Vec<f64> = a.iter().map(|v| -k * v + c).collect();
            prop_assert!((pearson(&n, &b).unwrap() + r).abs() < 1e-9);
            prop_assert!((spearman(&t, &b).unwrap() - spearman(&a, &b).unwrap()).abs() < 1e-12);
        }
    }
}
