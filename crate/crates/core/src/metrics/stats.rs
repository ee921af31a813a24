use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

pub const WILCOXON_MIN_PAIRS: usize = 20;

/// 1-based ranks, tied values sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::EmptyInput("correlation needs at least two pairs".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 {
        return Err(Error::UndefinedCorrelation("first series"));
    }
    if sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("second series"));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of midranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims(a.len(), b.len()));
    }
    pearson(&midranks(a), &midranks(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// Rank sum of positive differences `b − a`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(W+, W−)`.
    pub statistic: f64,
    /// Standardized `W+`, continuity-corrected toward zero.
    pub z: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_used: usize,
}

/// Two-sided signed-rank test on the differences `b − a`.
///
/// Zero differences are dropped, ties share midranks, and the p-value is
/// the normal approximation with continuity and tie corrections. At least
/// [`WILCOXON_MIN_PAIRS`] pairs are required.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<Wilcoxon> {
    if a.len() != b.len() {
        return Err(Error::dims(a.len(), b.len()));
    }
    if a.len() < WILCOXON_MIN_PAIRS {
        return Err(Error::SmallSample {
            min: WILCOXON_MIN_PAIRS,
            got: a.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(Error::DegenerateTest("all paired differences are zero".into()));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = diffs.len() as f64;
    let total = n * (n + 1.0) / 2.0;
    let w_minus = total - w_plus;

    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let mean = total / 2.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let dev = w_plus - mean;
    let corrected = (dev.abs() - 0.5).max(0.0);
    let (z, p_value) = if var > 0.0 {
        let z = corrected.copysign(dev) / var.sqrt();
        let normal = Normal::standard();
        (z, (2.0 * normal.sf(corrected / var.sqrt())).min(1.0))
    } else {
        (0.0, 1.0)
    };
    Ok(Wilcoxon {
        w_plus,
        w_minus,
        statistic: w_plus.min(w_minus),
        z,
        p_value,
        n_used: diffs.len(),
    })
}
