//! Gradient-based attributions for small dense networks, together with the
//! stochastic enhancers that average them over input noise (SmoothGrad),
//! multiplicative weight noise (NoiseGrad) or both (FusionGrad).
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`], [`seed`] and [`nn`] provide the numeric substrate: a dense
//!   `f64` tensor, deterministic child-seed derivation and a feed-forward
//!   ReLU network with reverse-mode gradients, SGD training and weight
//!   perturbation.
//! * [`data`] generates procedural datasets with ground-truth masks.
//! * [`explain`] holds the base attribution methods and [`enhance`] the
//!   noise-averaging wrappers.
//! * [`calibration`] picks noise levels from accuracy-drop targets.
//! * [`metrics`] scores attributions (localization, faithfulness,
//!   robustness, sparseness) and provides the rank statistics used to
//!   compare methods.
//! * [`am`] runs activation maximization over an ensemble of perturbed
//!   models and [`render`] writes the result as an image.
//!
//! Every stochastic operation takes an explicit seed and derives per-draw
//! child seeds with [`seed::mix`], so results never depend on scheduling.

pub mod am;
pub mod calibration;
pub mod data;
pub mod enhance;
mod error;
pub mod explain;
mod format;
pub mod metrics;
pub mod nn;
pub mod render;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
