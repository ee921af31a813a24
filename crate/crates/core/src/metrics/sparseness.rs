use crate::{Error, Result, Tensor};

/// Gini index of `|attr|`: `Σ (2i − n − 1) e_(i) / (n Σ e)` over the values
/// sorted ascending, `i` counted from 1.
///
/// The numerator is summed as `Σ_{i ≤ n/2} (n + 1 − 2i)(e_(n+1−i) − e_(i))`,
/// which pairs opposite coefficients so that a uniform vector gives exactly 0.
pub fn gini_index(attr: &Tensor) -> Result<f64> {
    let mut v: Vec<f64> = attr.data().iter().map(|x| x.abs()).collect();
    if v.is_empty() {
        return Err(Error::EmptyInput("attribution".into()));
    }
    let total: f64 = v.iter().sum();
    if total == 0.0 {
        return Err(Error::UndefinedSparseness);
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let len = v.len();
    let weighted: f64 = (0..len / 2)
        .map(|i| (len - 1 - 2 * i) as f64 * (v[len - 1 - i] - v[i]))
        .sum();
    Ok(weighted / (n * total))
}
