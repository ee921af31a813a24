use rand::seq::SliceRandom;

use super::{argmax, MlpModel, ParamGrads};
use crate::data::Dataset;
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Minibatch SGD with optional momentum and L2 weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainedReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainedReport {
    pub fn final_test_accuracy(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.test_accuracy)
    }

    pub fn final_train_accuracy(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_accuracy)
    }
}

/// Trains `model` in place on softmax cross-entropy.
///
/// Epoch `e` visits the training set in the order of a shuffle seeded with
/// `mix(opt.seed, SHUFFLE, e)`; nothing else is random, so equal inputs give
/// bitwise-equal weights.
pub fn train(
    model: &mut MlpModel,
    data: &Dataset,
    test: Option<&Dataset>,
    opt: &OptimizerConfig,
) -> Result<TrainedReport> {
    if data.is_empty() {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    if data.input_dim() != model.input_dim() {
        return Err(Error::dims(model.input_dim(), data.input_dim()));
    }
    let k = model.output_dim();
    if let Some(&bad) = data.labels().iter().find(|&&y| y >= k) {
        return Err(Error::Index { index: bad, len: k });
    }
    if opt.batch_size == 0 {
        return Err(Error::Parameter("batch_size must be >= 1".into()));
    }
    if !(opt.learning_rate > 0.0) || !(0.0..1.0).contains(&opt.momentum) || opt.weight_decay < 0.0 {
        return Err(Error::Parameter(format!("invalid optimizer settings {opt:?}")));
    }

    let mut velocity = ParamGrads::zeros_like(model);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainedReport::default();

    for epoch in 0..opt.epochs {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(seed::mix(opt.seed, stream::SHUFFLE, epoch as u64)));

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(opt.batch_size) {
            let mut grads = ParamGrads::zeros_like(model);
            for &i in batch {
                let tape = model.forward_tape(&data.inputs()[i])?;
                let logits = tape.output();
                let y = data.labels()[i];
                let (loss, dlogits) = softmax_cross_entropy(logits, y);
                if argmax(logits) == y {
                    correct += 1;
                }
                loss_sum += loss;
                tape.backward_params(model, &dlogits, &mut grads);
            }
            if !loss_sum.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            let scale = 1.0 / batch.len() as f64;
            for (l, layer) in model.layers_mut().iter_mut().enumerate() {
                sgd_step(
                    layer.weight.data_mut(),
                    &grads.weight[l],
                    &mut velocity.weight[l],
                    scale,
                    opt,
                    true,
                );
                sgd_step(
                    layer.bias.data_mut(),
                    &grads.bias[l],
                    &mut velocity.bias[l],
                    scale,
                    opt,
                    false,
                );
            }
        }
        let loss = loss_sum / data.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let test_accuracy = test.filter(|t| !t.is_empty()).map(|t| model.accuracy(t)).transpose()?;
        let stats = EpochStats {
            epoch,
            loss,
            train_accuracy: correct as f64 / data.len() as f64,
            test_accuracy,
        };
        log::debug!("epoch {epoch}: loss {loss:.5} train acc {:.4}", stats.train_accuracy);
        report.epochs.push(stats);
    }
    Ok(report)
}

fn sgd_step(params: &mut [f64], grad: &[f64], vel: &mut [f64], scale: f64, opt: &OptimizerConfig, decay: bool) {
    let wd = if decay { opt.weight_decay } else { 0.0 };
    for ((p, &g), v) in params.iter_mut().zip(grad).zip(vel.iter_mut()) {
        let g = g * scale + wd * *p;
        *v = opt.momentum * *v + g;
        *p -= opt.learning_rate * *v;
    }
}

/// Loss and `∂loss/∂logits` for one sample.
pub(crate) fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = total.ln() - (logits[label] - max);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / total).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;

    fn two_points() -> Dataset {
        Dataset::new(
            "pair",
            vec![1],
            2,
            vec![Tensor::from_vec(vec![-1.0]), Tensor::from_vec(vec![1.0])],
            vec![0, 1],
            None,
        )
        .unwrap()
    }

    #[test]
    fn zero_epochs_leave_weights_untouched() {
        let mut m = MlpModel::init(&[1, 4, 2], 3).unwrap();
        let before = m.clone();
        let opt = OptimizerConfig {
            epochs: 0,
            ..Default::default()
        };
        let report = train(&mut m, &two_points(), None, &opt).unwrap();
        assert!(report.epochs.is_empty());
        assert!(m.bits_eq(&before));
    }

    #[test]
    fn separable_pair_is_learned() {
        let mut m = MlpModel::init(&[1, 2], 1).unwrap();
        let opt = OptimizerConfig {
            epochs: 100,
            batch_size: 2,
            learning_rate: 0.1,
            momentum: 0.0,
            ..Default::default()
        };
        train(&mut m, &two_points(), None, &opt).unwrap();
        assert_eq!(m.accuracy(&two_points()).unwrap(), 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let data = two_points();
        let opt = OptimizerConfig {
            epochs: 5,
            batch_size: 1,
            ..Default::default()
        };
        let mut a = MlpModel::init(&[1, 3, 2], 8).unwrap();
        let mut b = a.clone();
        train(&mut a, &data, None, &opt).unwrap();
        train(&mut b, &data, None, &opt).unwrap();
        assert!(a.bits_eq(&b));
    }

    #[test]
    fn divergence_is_reported() {
        let data = Dataset::new(
            "huge",
            vec![1],
            2,
            vec![Tensor::from_vec(vec![1e300]), Tensor::from_vec(vec![-1e300])],
            vec![0, 0],
            None,
        )
        .unwrap();
        let mut m = MlpModel::init(&[1, 2], 1).unwrap();
        let opt = OptimizerConfig {
            epochs: 3,
            learning_rate: 1e10,
            ..Default::default()
        };
        assert!(matches!(train(&mut m, &data, None, &opt), Err(Error::Divergence { .. })));
    }

    #[test]
    fn softmax_gradient_sums_to_zero() {
        let (loss, g) = softmax_cross_entropy(&[1.0, 2.0, -0.5], 1);
        assert!(loss > 0.0);
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
    }
}
