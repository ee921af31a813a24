//! Datasets with optional ground-truth explanation masks.

mod glyph;
mod io;
mod toy;

pub use glyph::{glyph_pattern, make_masked_glyph, GlyphSpec, MaskKind, GLYPH_NAMES};
pub use io::{decode_dataset, encode_dataset, load_dataset, save_dataset, DATASET_MAGIC};
pub use toy::{make_toy_gauss, ToyGaussSpec};

use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    sample_shape: Vec<usize>,
    num_classes: usize,
    inputs: Vec<Tensor>,
    labels: Vec<usize>,
    masks: Option<Vec<Tensor>>,
}

impl Dataset {
    /// Checks lengths, shapes, label range and that masks are binary with
    /// at least one positive entry.
    pub fn new(
        name: impl Into<String>,
        sample_shape: Vec<usize>,
        num_classes: usize,
        inputs: Vec<Tensor>,
        labels: Vec<usize>,
        masks: Option<Vec<Tensor>>,
    ) -> Result<Self> {
        let name = name.into();
        if name.contains('\n') {
            return Err(Error::Parameter("dataset name must not contain newlines".into()));
        }
        if num_classes == 0 {
            return Err(Error::Parameter("num_classes must be >= 1".into()));
        }
        if inputs.len() != labels.len() {
            return Err(Error::dims(inputs.len(), labels.len()));
        }
        for x in &inputs {
            if x.shape() != sample_shape.as_slice() {
                return Err(Error::dims(&sample_shape, x.shape()));
            }
            if !x.is_finite() {
                return Err(Error::Parameter("inputs must be finite".into()));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Index {
                index: bad,
                len: num_classes,
            });
        }
        if let Some(masks) = &masks {
            if masks.len() != inputs.len() {
                return Err(Error::dims(inputs.len(), masks.len()));
            }
            for m in masks {
                if m.shape() != sample_shape.as_slice() {
                    return Err(Error::dims(&sample_shape, m.shape()));
                }
                if m.data().iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::Parameter("masks must be binary".into()));
                }
                if !m.data().contains(&1.0) {
                    return Err(Error::Parameter("every mask needs a positive entry".into()));
                }
            }
        }
        Ok(Self {
            name,
            sample_shape,
            num_classes,
            inputs,
            labels,
            masks,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sample_shape(&self) -> &[usize] {
        &self.sample_shape
    }

    pub fn input_dim(&self) -> usize {
        self.sample_shape.iter().product()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn inputs(&self) -> &[Tensor] {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn masks(&self) -> Option<&[Tensor]> {
        self.masks.as_deref()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Index {
                index: bad,
                len: self.len(),
            });
        }
        Ok(Dataset {
            name: self.name.clone(),
            sample_shape: self.sample_shape.clone(),
            num_classes: self.num_classes,
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            masks: self
                .masks
                .as_ref()
                .map(|m| indices.iter().map(|&i| m[i].clone()).collect()),
        })
    }

    /// Smallest and largest input value over all samples.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        if self.is_empty() {
            return None;
        }
        let lo = self.inputs.iter().map(Tensor::min).fold(f64::INFINITY, f64::min);
        let hi = self.inputs.iter().map(Tensor::max).fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}
