use super::MlpModel;

/// Forward intermediates of a single pass.
///
/// `inputs[l]` is the input vector of layer `l` (so `inputs[0]` is `x`) and
/// `pre[l]` its pre-activation. A tape is only meaningful together with the
/// model that recorded it.
#[derive(Debug, Clone)]
pub struct GradTape {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

/// Parameter gradients laid out like the model's layers.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl ParamGrads {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weight: model.layers().iter().map(|l| vec![0.0; l.weight.len()]).collect(),
            bias: model.layers().iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }
}

impl GradTape {
    pub(crate) fn record(model: &MlpModel, x: &[f64]) -> Self {
        let n = model.layers().len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut a = x.to_vec();
        for layer in model.layers() {
            let mut z = Vec::new();
            layer.affine(&a, &mut z);
            let next: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Self {
            inputs,
            pre,
            output: a,
        }
    }

    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Input vector of layer `l`; `layer_input(0)` is the network input.
    pub fn layer_input(&self, l: usize) -> &[f64] {
        &self.inputs[l]
    }

    /// Post-activation output of layer `l`.
    pub fn layer_output(&self, l: usize) -> Vec<f64> {
        if l + 1 < self.inputs.len() {
            self.inputs[l + 1].clone()
        } else {
            self.output.clone()
        }
    }

    pub fn preactivation(&self, l: usize) -> &[f64] {
        &self.pre[l]
    }

    /// Smallest `|z|` over hidden-layer pre-activations, i.e. the distance
    /// to the nearest ReLU kink.
    pub fn min_abs_preactivation(&self) -> f64 {
        let hidden = self.pre.len().saturating_sub(1);
        self.pre[..hidden]
            .iter()
            .flat_map(|z| z.iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Gradient w.r.t. the network input of `Σ_k seed_k · out_k`.
    pub fn backward_input(&self, model: &MlpModel, grad_output: &[f64]) -> Vec<f64> {
        self.backward_from(model, model.layers().len() - 1, grad_output)
    }

    /// Gradient w.r.t. the network input of `Σ_k seed_k · a_k`, where `a` is
    /// the post-activation output of layer `layer`.
    pub fn backward_from(&self, model: &MlpModel, layer: usize, grad_output: &[f64]) -> Vec<f64> {
        let mut g = grad_output.to_vec();
        for l in (0..=layer).rev() {
            let lay = &model.layers()[l];
            let dz: Vec<f64> = g
                .iter()
                .zip(&self.pre[l])
                .map(|(gi, &z)| gi * lay.activation.derivative(z))
                .collect();
            g = transpose_mul(lay.weight.data(), lay.out_dim(), lay.in_dim(), &dz);
        }
        g
    }

    /// Accumulates parameter gradients of `Σ_k seed_k · out_k` into `grads`.
    pub fn backward_params(&self, model: &MlpModel, grad_output: &[f64], grads: &mut ParamGrads) {
        let mut g = grad_output.to_vec();
        for l in (0..model.layers().len()).rev() {
            let lay = &model.layers()[l];
            let n_in = lay.in_dim();
            let dz: Vec<f64> = g
                .iter()
                .zip(&self.pre[l])
                .map(|(gi, &z)| gi * lay.activation.derivative(z))
                .collect();
            let input = &self.inputs[l];
            for (o, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grads.bias[l][o] += d;
                let row = &mut grads.weight[l][o * n_in..(o + 1) * n_in];
                for (w, &a) in row.iter_mut().zip(input) {
                    *w += d * a;
                }
            }
            if l > 0 {
                g = transpose_mul(lay.weight.data(), lay.out_dim(), n_in, &dz);
            }
        }
    }
}

/// `Wᵀ v` for a row-major `[rows, cols]` matrix.
fn transpose_mul(w: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (r, &vr) in v.iter().enumerate().take(rows) {
        if vr == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (o, &wi) in out.iter_mut().zip(row) {
            *o += wi * vr;
        }
    }
    out
}
