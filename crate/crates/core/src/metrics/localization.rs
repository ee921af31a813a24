use super::stats::midranks;
use crate::{Error, Result, Tensor};

fn check_shapes(attr: &Tensor, mask: &Tensor) -> Result<()> {
    if attr.len() != mask.len() {
        return Err(Error::dims(mask.shape(), attr.shape()));
    }
    Ok(())
}

fn positive(m: f64) -> bool {
    m > 0.5
}

/// Fraction of the `K = |mask|` highest-ranked features that fall inside
/// the mask. Ties at the cut go to the lowest flat index.
pub fn relevance_rank_accuracy(attr: &Tensor, mask: &Tensor) -> Result<f64> {
    check_shapes(attr, mask)?;
    let k = mask.data().iter().filter(|&&m| positive(m)).count();
    if k == 0 {
        return Err(Error::EmptyInput("ground-truth mask has no positive entry".into()));
    }
    let v = attr.data();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let hits = order[..k].iter().filter(|&&i| positive(mask.data()[i])).count();
    Ok(hits as f64 / k as f64)
}

/// ROC AUC of attribution scores against mask labels, via the midrank sum.
pub fn ranking_auc(attr: &Tensor, mask: &Tensor) -> Result<f64> {
    check_shapes(attr, mask)?;
    let ranks = midranks(attr.data());
    let mut n_pos = 0usize;
    let mut rank_sum = 0.0;
    for (r, &m) in ranks.iter().zip(mask.data()) {
        if positive(m) {
            n_pos += 1;
            rank_sum += r;
        }
    }
    let n_neg = mask.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Parameter("AUC needs both positive and negative mask entries".into()));
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// `auc / auc_baseline − 1`.
pub fn d_auc(auc: f64, auc_baseline: f64) -> Result<f64> {
    if !(auc_baseline > 0.0) {
        return Err(Error::Parameter(format!("baseline AUC must be > 0, got {auc_baseline}")));
    }
    Ok(auc / auc_baseline - 1.0)
}
