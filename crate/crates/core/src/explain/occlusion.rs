use crate::nn::MlpModel;
use crate::{Error, Result, Tensor};

/// Score drop `f_c(x) − f_c(x with patch := fill)` spread over each patch.
///
/// Two-dimensional inputs are tiled with `patch × patch` squares, anything
/// else with contiguous windows of `patch` features. Edge patches may be
/// smaller.
pub fn occlusion_signed(model: &MlpModel, x: &Tensor, class_index: usize, patch: usize, fill: f64) -> Result<Tensor> {
    if patch == 0 {
        return Err(Error::Parameter("occlusion patch size must be >= 1".into()));
    }
    let reference = model.logit(x, class_index)?;
    let mut out = vec![0.0; x.len()];
    let mut probe = x.clone();
    for cells in patches(x.shape(), patch) {
        for &i in &cells {
            probe.data_mut()[i] = fill;
        }
        let drop = reference - model.logit(&probe, class_index)?;
        for &i in &cells {
            out[i] = drop;
            probe.data_mut()[i] = x.data()[i];
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

fn patches(shape: &[usize], patch: usize) -> Vec<Vec<usize>> {
    if let [h, w] = *shape {
        let mut out = Vec::new();
        for r0 in (0..h).step_by(patch) {
            for c0 in (0..w).step_by(patch) {
                let cells = (r0..(r0 + patch).min(h))
                    .flat_map(|r| (c0..(c0 + patch).min(w)).map(move |c| r * w + c))
                    .collect();
                out.push(cells);
            }
        }
        out
    } else {
        let n: usize = shape.iter().product();
        (0..n)
            .step_by(patch)
            .map(|s| (s..(s + patch).min(n)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patches_tile_2d_with_ragged_edges() {
        let p = patches(&[5, 5], 2);
        assert_eq!(p.len(), 9);
        let mut all: Vec<usize> = p.concat();
        all.sort_unstable();
        assert_eq!(all, (0..25).collect::<Vec<_>>());
        assert_eq!(p[2], vec![4, 9]);
    }

    #[test]
    fn patches_tile_1d() {
        assert_eq!(patches(&[5], 2), vec![vec![0, 1], vec![2, 3], vec![4]]);
    }
}
