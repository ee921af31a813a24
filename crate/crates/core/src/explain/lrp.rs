//! LRP-γ for dense ReLU networks.
//!
//! Relevance of layer input `j` given relevances `R_k` of the layer output:
//!
//! ```text
//! R_j = Σ_k a_j (w_kj + γ w_kj⁺) / (z_k + ε sign(z_k)) · R_k
//! z_k = Σ_j a_j (w_kj + γ w_kj⁺) + (b_k + γ b_k⁺)
//! ```
//!
//! The bias term sits in the denominator only, so relevance assigned to it
//! is absorbed rather than redistributed. On bias-free networks every layer
//! conserves the seeded output relevance up to the stabilizer.

use crate::nn::MlpModel;
use crate::{Error, Result, Tensor};

pub const LRP_EPSILON: f64 = 1e-9;

/// Relevance vectors for every layer boundary: index 0 is the input,
/// the last entry is the output seed (`f_c(x)` at class `c`, zero elsewhere).
pub fn lrp_gamma_relevances(model: &MlpModel, x: &Tensor, class_index: usize, gamma: f64) -> Result<Vec<Vec<f64>>> {
    if !(gamma >= 0.0) {
        return Err(Error::Parameter(format!("gamma must be >= 0, got {gamma}")));
    }
    model_check(model, class_index)?;
    let tape = model.forward_tape(x)?;
    let n_layers = model.layers().len();

    let mut seed = vec![0.0; model.output_dim()];
    seed[class_index] = tape.output()[class_index];
    let mut out = vec![seed];

    for l in (0..n_layers).rev() {
        let layer = &model.layers()[l];
        let (n_out, n_in) = (layer.out_dim(), layer.in_dim());
        let w = layer.weight.data();
        let b = layer.bias.data();
        let a = tape.layer_input(l);
        let upper = out.last().expect("seeded");

        let mut lower = vec![0.0; n_in];
        for k in 0..n_out {
            let rk = upper[k];
            if rk == 0.0 {
                continue;
            }
            let row = &w[k * n_in..(k + 1) * n_in];
            let mut z = b[k] + gamma * b[k].max(0.0);
            for (&wj, &aj) in row.iter().zip(a) {
                z += aj * (wj + gamma * wj.max(0.0));
            }
            let stab = if z >= 0.0 { LRP_EPSILON } else { -LRP_EPSILON };
            let s = rk / (z + stab);
            for ((rj, &wj), &aj) in lower.iter_mut().zip(row).zip(a) {
                *rj += aj * (wj + gamma * wj.max(0.0)) * s;
            }
        }
        out.push(lower);
    }
    out.reverse();
    Ok(out)
}

/// Input-layer relevance before the absolute value.
pub fn lrp_gamma_signed(model: &MlpModel, x: &Tensor, class_index: usize, gamma: f64) -> Result<Tensor> {
    let mut layers = lrp_gamma_relevances(model, x, class_index, gamma)?;
    Tensor::new(x.shape().to_vec(), layers.swap_remove(0))
}

fn model_check(model: &MlpModel, class_index: usize) -> Result<()> {
    if class_index >= model.output_dim() {
        return Err(Error::Index {
            index: class_index,
            len: model.output_dim(),
        });
    }
    Ok(())
}
