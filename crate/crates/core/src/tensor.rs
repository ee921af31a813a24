//! Dense row-major `f64` tensor.

use std::fmt;

use crate::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking that `shape` describes `data.len()` entries.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::dims(expected, data.len()));
        }
        Ok(Self { shape, data })
    }

    /// One-dimensional tensor.
    pub fn from_vec(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    /// Same data under another tensor's shape.
    pub fn with_shape_of(self, other: &Tensor) -> Result<Self> {
        Self::new(other.shape.clone(), self.data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dims(&self.shape, &other.shape));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Euclidean (Frobenius) norm of the flattened data.
    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Equality of shape and of every entry's bit pattern.
    pub fn bits_eq(&self, other: &Tensor) -> bool {
        self.shape == other.shape
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}

/// Incremental element-wise mean, `m_k = m_{k-1} + (v_k - m_{k-1}) / k`.
///
/// Averaging `n` bitwise-identical terms returns that term bitwise, which
/// the degenerate-noise reductions of the enhancers rely on.
#[derive(Debug, Clone)]
pub struct RunningMean {
    mean: Vec<f64>,
    count: usize,
}

impl RunningMean {
    pub fn new(len: usize) -> Self {
        Self {
            mean: vec![0.0; len],
            count: 0,
        }
    }

    pub fn push(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.mean.len());
        self.count += 1;
        if self.count == 1 {
            self.mean.copy_from_slice(values);
            return;
        }
        let k = self.count as f64;
        for (m, &v) in self.mean.iter_mut().zip(values) {
            *m += (v - *m) / k;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(self) -> Vec<f64> {
        self.mean
    }
}

/// Scalar counterpart of [`RunningMean`].
pub fn running_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut mean = 0.0;
    for (k, v) in values.into_iter().enumerate() {
        if k == 0 {
            mean = v;
        } else {
            mean += (v - mean) / (k + 1) as f64;
        }
    }
    mean
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_data() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::new(vec![2, 3], vec![0.0; 5]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn running_mean_of_identical_terms_is_exact() {
        let v = [0.1, 1.0 / 3.0, -7.3e-5];
        let mut m = RunningMean::new(3);
        for _ in 0..17 {
            m.push(&v);
        }
        let out = m.finish();
        for (a, b) in out.iter().zip(&v) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(running_mean(std::iter::repeat_n(0.3, 11)).to_bits(), 0.3f64.to_bits());
    }

    #[test]
    fn running_mean_matches_sum() {
        let mut m = RunningMean::new(1);
        for i in 1..=10 {
            m.push(&[i as f64]);
        }
        assert!((m.finish()[0] - 5.5).abs() < 1e-12);
    }
}
