use super::stats::spearman;
use crate::nn::MlpModel;
use crate::{Error, Result, Tensor};

/// Std of the fresh parameters of the randomized model.
pub const SANITY_STD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SanityReport {
    pub mean_spearman: f64,
    /// `None` where either explanation had constant ranks.
    pub per_sample: Vec<Option<f64>>,
    pub excluded: usize,
}

/// Mean Spearman correlation between explanations of `model` and of a
/// fully re-initialized copy (`N(0, 0.05²)` for every parameter).
pub fn sanity_randomization(
    model: &MlpModel,
    explain_fn: impl Fn(&MlpModel, &Tensor, usize) -> Result<Tensor>,
    samples: &[(Tensor, usize)],
    seed: u64,
) -> Result<SanityReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("sanity check needs at least one sample".into()));
    }
    let random = model.randomized(SANITY_STD, seed)?;
    let mut per_sample = Vec::with_capacity(samples.len());
    for (i, (x, c)) in samples.iter().enumerate() {
        let a = explain_fn(model, x, *c)?;
        let b = explain_fn(&random, x, *c)?;
        match spearman(a.data(), b.data()) {
            Ok(r) => per_sample.push(Some(r)),
            Err(Error::UndefinedCorrelation(which)) => {
                log::warn!("sanity check: sample {i} excluded, {which} has constant ranks");
                per_sample.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let kept: Vec<f64> = per_sample.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(Error::EmptyInput("every sanity sample had constant ranks".into()));
    }
    Ok(SanityReport {
        mean_spearman: kept.iter().sum::<f64>() / kept.len() as f64,
        excluded: per_sample.len() - kept.len(),
        per_sample,
    })
}
