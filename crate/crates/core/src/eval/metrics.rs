//! Rank metrics with IND as the positive class.

use crate::error::{Error, Result};

fn check(ind: &[f64], ood: &[f64]) -> Result<()> {
    if ind.is_empty() || ood.is_empty() {
        return Err(Error::Empty(format!(
            "metrics need both sides non-empty (n_ind={}, n_ood={})",
            ind.len(),
            ood.len()
        )));
    }
    if ind.iter().chain(ood).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("score vector contains NaN/Inf".into()));
    }
    Ok(())
}

/// Area under the ROC curve via the Mann–Whitney statistic with average
/// ranks for ties: the probability that a random IND score exceeds a random
/// OOD score, ties counting one half.
pub fn auroc(ind: &[f64], ood: &[f64]) -> Result<f64> {
    check(ind, ood)?;
    let mut all: Vec<(f64, bool)> = ind
        .iter()
        .map(|&s| (s, true))
        .chain(ood.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Ranks are 1-based; a tie block spanning ranks i+1..=j gets (i+1+j)/2.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        let n_ind_in_block = all[i..j].iter().filter(|e| e.1).count();
        rank_sum += avg * n_ind_in_block as f64;
        i = j;
    }
    let (ni, no) = (ind.len() as f64, ood.len() as f64);
    Ok((rank_sum - ni * (ni + 1.0) / 2.0) / (ni * no))
}

/// Detection threshold for IND recall `q`: the `⌈(1 − q)·n⌉`-th smallest IND
/// score (at least the first).
pub fn threshold_at_tpr(ind: &[f64], q: f64) -> Result<f64> {
    if ind.is_empty() {
        return Err(Error::Empty("threshold needs IND scores".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param(format!("target TPR must be in (0, 1], got {q}")));
    }
    let mut sorted = ind.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // The small slack keeps e.g. (1 − 0.95)·100 from rounding up to 6.
    let k = (((1.0 - q) * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    Ok(sorted[k - 1])
}

/// False positive rate of OOD samples at the threshold giving IND recall
/// `q`; both rates use `score ≥ τ`.
pub fn fpr_at_tpr(ind: &[f64], ood: &[f64], q: f64) -> Result<f64> {
    check(ind, ood)?;
    let tau = threshold_at_tpr(ind, q)?;
    Ok(ood.iter().filter(|&&s| s >= tau).count() as f64 / ood.len() as f64)
}

/// TPR (fraction of IND with `score ≥ τ`).
pub fn tpr_at(ind: &[f64], tau: f64) -> f64 {
    ind.iter().filter(|&&s| s >= tau).count() as f64 / ind.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[3.0, 4.0, 5.0], &[0.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(auroc(&[1.0, 2.0, 2.0], &[0.0, 2.0]).unwrap(), 4.0 / 6.0);
        assert_eq!(auroc(&[0.0, 1.0, 2.0], &[3.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn auroc_rejects_empty_sides() {
        assert!(matches!(auroc(&[], &[1.0]), Err(Error::Empty(_))));
        assert!(auroc(&[1.0], &[]).is_err());
        assert!(auroc(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn fpr_examples() {
        assert_eq!(fpr_at_tpr(&[3.0, 4.0, 5.0], &[0.0, 1.0, 2.0], 0.95).unwrap(), 0.0);
        let ind: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(threshold_at_tpr(&ind, 0.95).unwrap(), 5.0);
        assert_eq!(tpr_at(&ind, 5.0), 0.96);
        assert_eq!(fpr_at_tpr(&ind, &[0.5, 5.5, 200.0], 0.95).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn identical_sets_give_fpr_equal_to_tpr() {
        let s = [0.1, 0.4, 0.4, 0.9, 0.3, 0.7, 0.2];
        let tau = threshold_at_tpr(&s, 0.95).unwrap();
        let fpr = fpr_at_tpr(&s, &s, 0.95).unwrap();
        assert_eq!(fpr, tpr_at(&s, tau));
        assert!(fpr >= 0.95);
    }
}
