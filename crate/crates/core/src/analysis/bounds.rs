//! Lower bounds on perturbed confidence for adversarially trained models.
//!
//! If `𝓔` is the expected worst-case cross-entropy inside an L∞ ball, the
//! expected minimum true-class probability over that ball is at least
//! `exp(−𝓔)`, and so is the expected minimum MSP.

use serde::{Deserialize, Serialize};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{pgd_attack, per_sample_ce, Classifier};
use crate::pro::{pro_scores, NetScore, ProConfig, ScoreField};
use crate::scores::ScoreFn;

/// `exp(−E)`.
pub fn msp_bound(e_hat: f64) -> f64 {
    (-e_hat).exp()
}

/// `h(p) = p·log p + (1−p)·log(1−p) + p·log(C−1) − log(C−1)`, with
/// `0·log 0 = 0`.
pub fn entropy_h(p: f64, class_count: usize) -> Result<f64> {
    if class_count < 2 {
        return Err(Error::param(format!("need C ≥ 2, got {class_count}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("h takes p in [0, 1], got {p}")));
    }
    let xlogx = |v: f64, lv: f64| if v == 0.0 { 0.0 } else { v * lv };
    let lc = ((class_count - 1) as f64).ln();
    Ok(xlogx(p, p.ln()) + xlogx(1.0 - p, (-p).ln_1p()) + p * lc - lc)
}

/// Lower bound on expected negative entropy: `h(exp(−E))`.
///
/// Valid only where `h` is nondecreasing, i.e. `exp(−E) ≥ 1/C`.
pub fn entropy_bound(e_hat: f64, class_count: usize) -> Result<f64> {
    if !(e_hat >= 0.0 && e_hat.is_finite()) {
        return Err(Error::param(format!("E must be finite and ≥ 0, got {e_hat}")));
    }
    let p = msp_bound(e_hat);
    let floor = 1.0 / class_count as f64;
    // Tolerate rounding at E = log C.
    if p < floor * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "exp(-{e_hat}) = {p} is below 1/C = {floor}; the entropy bound does not apply"
        )));
    }
    entropy_h(p.max(floor), class_count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim1Report {
    pub eps: f64,
    pub pgd_steps: usize,
    pub n: usize,
    /// Mean PGD-maximized cross-entropy over the samples.
    pub e_hat: f64,
    /// Mean MSP after PRO descent inside the same ball.
    pub mean_min_msp: f64,
    /// `exp(−e_hat)`.
    pub bound: f64,
    pub holds: bool,
    pub clean_ce: f64,
    pub mean_clean_msp: f64,
}

/// Compares the perturbed MSP of labeled samples with `exp(−Ê)`.
///
/// PGD uses `pgd_steps` steps of `2.5·ε/pgd_steps`; PRO uses the same
/// number of steps of `ε/pgd_steps`, so both stay in the ε ball. PGD only
/// approximates the inner maximum, so `Ê` can underestimate the true
/// adversarial loss and the comparison is not conservative; both numbers
/// are reported.
pub fn claim1_check(net: &Classifier, data: &LabeledDataset, eps: f64, pgd_steps: usize) -> Result<Claim1Report> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::param(format!("eps must be ≥ 0, got {eps}")));
    }
    if eps > 0.0 && pgd_steps == 0 {
        return Err(Error::param("pgd_steps must be ≥ 1 when eps > 0"));
    }
    let labels = data.class_indices()?;
    let x = &data.x;
    let mean_ce = |input| -> Result<f64> {
        let mut pass = net.forward(input)?;
        let per = per_sample_ce(&mut pass.tape, pass.logits, &labels)?;
        let v = pass.tape.value(per).data();
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let field = NetScore::new(net, ScoreFn::Msp)?;
    let clean_msp = field.score(x)?;
    let clean_ce = mean_ce(x)?;
    let (e_hat, mean_min_msp) = if eps == 0.0 {
        (clean_ce, mean(&clean_msp))
    } else {
        let step = eps / pgd_steps as f64;
        let adv = pgd_attack(net, x, &labels, eps, pgd_steps, 2.5 * step)?;
        let min_msp = pro_scores(&field, x, &ProConfig::new(step, pgd_steps))?;
        (mean_ce(&adv)?, mean(&min_msp))
    };
    let bound = msp_bound(e_hat);
    Ok(Claim1Report {
        eps,
        pgd_steps,
        n: labels.len(),
        e_hat,
        mean_min_msp,
        bound,
        holds: mean_min_msp >= bound,
        clean_ce,
        mean_clean_msp: mean(&clean_msp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msp_bound_values() {
        assert_eq!(msp_bound(0.0), 1.0);
        assert!((msp_bound(10f64.ln()) - 0.1).abs() < 1e-15);
        assert!((msp_bound(0.223) - 0.800).abs() < 1e-3);
    }

    #[test]
    fn entropy_bound_edges() {
        for c in [2usize, 10, 100] {
            let lc = (c as f64).ln();
            assert!((entropy_bound(lc, c).unwrap() + lc).abs() < 1e-12);
            assert_eq!(entropy_bound(0.0, c).unwrap(), 0.0);
        }
        assert!(matches!(entropy_bound(3.0, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn entropy_bound_matches_negative_entropy_of_the_extremal_distribution() {
        // Mass p on one class and (1−p)/(C−1) on the rest has negative
        // entropy h(p).
        let (c, e) = (10usize, 0.1f64);
        let p = (-e).exp();
        let q = (1.0 - p) / (c - 1) as f64;
        let direct = p * p.ln() + (c - 1) as f64 * q * q.ln();
        assert!((entropy_bound(e, c).unwrap() - direct).abs() < 1e-14);
    }
}
