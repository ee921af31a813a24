//! Attribution-quality metrics, rank statistics and the randomization check.

mod faithfulness;
mod localization;
mod sanity;
mod sensitivity;
mod sparseness;
mod stats;

pub use faithfulness::{faithfulness_corr, FaithfulnessConfig};
pub use localization::{d_auc, ranking_auc, relevance_rank_accuracy};
pub use sanity::{sanity_randomization, SanityReport, SANITY_STD};
pub use sensitivity::{max_sensitivity, SensitivityConfig};
pub use sparseness::gini_index;
pub use stats::{midranks, pearson, spearman, wilcoxon_signed_rank, Wilcoxon, WILCOXON_MIN_PAIRS};

use crate::{Error, Result};

/// The four quality properties of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Localization,
    Faithfulness,
    Robustness,
    Sparseness,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Localization, Metric::Faithfulness, Metric::Robustness, Metric::Sparseness];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Localization => "localization",
            Metric::Faithfulness => "faithfulness",
            Metric::Robustness => "robustness",
            Metric::Sparseness => "sparseness",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Robustness is max-sensitivity, where lower is better.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Robustness)
    }
}

/// Per-sample scores of one metric with their mean and population std.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metric: String,
    pub scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub config: String,
}

impl MetricReport {
    pub fn new(metric: impl Into<String>, scores: Vec<f64>, config: impl Into<String>) -> Result<Self> {
        let metric = metric.into();
        if scores.is_empty() {
            return Err(Error::EmptyInput(format!("no scores for {metric}")));
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Parameter(format!("non-finite score {bad} for {metric}")));
        }
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(Self {
            metric,
            scores,
            mean,
            std,
            config: config.into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_moments() {
        let r = MetricReport::new("m", vec![1.0, 2.0, 3.0, 4.0], "").unwrap();
        assert_eq!(r.mean, 2.5);
        assert!((r.std - 1.25f64.sqrt()).abs() < 1e-15);
        assert!(MetricReport::new("m", vec![f64::NAN], "").is_err());
        assert!(MetricReport::new("m", vec![], "").is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(Metric::parse(m.name()), Some(m));
        }
        assert!(!Metric::Robustness.higher_is_better());
    }
}
