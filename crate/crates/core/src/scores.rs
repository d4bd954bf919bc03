//! Softmax-family OOD scores over a logit vector.
//!
//! Every score follows the same sign convention: larger means "more
//! in-distribution". Each score has two routes: a direct scalar evaluation
//! over a logit slice and a tape recording that yields input gradients.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::tape::gen_term;
use crate::tensor::{Tape, Var};

/// A parameterized score function of logits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreFn {
    /// Maximum softmax probability.
    Msp,
    /// Maximum softmax probability at temperature `t`.
    MspT { t: f64 },
    /// Negative Shannon entropy of the softmax.
    Ent,
    /// Negated generalized entropy over the top-`m` probabilities.
    Gen { gamma: f64, m: usize },
    /// Energy score `t · logsumexp(z / t)`.
    Ebo { t: f64 },
}

impl fmt::Display for ScoreFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl ScoreFn {
    pub fn name(&self) -> &'static str {
        match self {
            ScoreFn::Msp => "MSP",
            ScoreFn::MspT { .. } => "MSP-T",
            ScoreFn::Ent => "ENT",
            ScoreFn::Gen { .. } => "GEN",
            ScoreFn::Ebo { .. } => "EBO",
        }
    }

    pub fn temperature(&self) -> Option<f64> {
        match *self {
            ScoreFn::MspT { t } | ScoreFn::Ebo { t } => Some(t),
            _ => None,
        }
    }

    /// Whether the score is a probability in `[0, 1]`.
    pub fn is_probability(&self) -> bool {
        matches!(self, ScoreFn::Msp | ScoreFn::MspT { .. })
    }

    /// Checks parameters against a class count.
    pub fn validate(&self, class_count: usize) -> Result<()> {
        if class_count < 2 {
            return Err(Error::param(format!(
                "scores need at least 2 classes, got {class_count}"
            )));
        }
        match *self {
            ScoreFn::MspT { t } | ScoreFn::Ebo { t } if !(t > 0.0 && t.is_finite()) => {
                Err(Error::param(format!("temperature must be > 0, got {t}")))
            }
            ScoreFn::Gen { gamma, .. } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::param(format!("gamma must be > 0, got {gamma}")))
            }
            ScoreFn::Gen { m, .. } if m == 0 || m > class_count => Err(Error::param(format!(
                "GEN top-M must be in [1, {class_count}], got {m}"
            ))),
            _ => Ok(()),
        }
    }

    /// Direct evaluation on one logit vector.
    pub fn eval(&self, logits: &[f64]) -> Result<f64> {
        match *self {
            ScoreFn::Msp => msp(logits, 1.0),
            ScoreFn::MspT { t } => msp(logits, t),
            ScoreFn::Ent => neg_entropy(logits),
            ScoreFn::Gen { gamma, m } => gen_score(logits, gamma, m),
            ScoreFn::Ebo { t } => ebo(logits, t),
        }
    }

    /// Records the score of every row of `logits` on `tape`. The result has
    /// the logits' shape minus the class axis.
    pub fn record(&self, tape: &mut Tape, logits: Var) -> Result<Var> {
        let c = tape.value(logits).cols();
        self.validate(c)?;
        match *self {
            ScoreFn::Msp | ScoreFn::MspT { .. } => {
                let ls = tape.log_softmax(logits, self.temperature().unwrap_or(1.0))?;
                let top = tape.row_max(ls)?;
                tape.exp(top)
            }
            ScoreFn::Ent => {
                let ls = tape.log_softmax(logits, 1.0)?;
                let p = tape.exp(ls)?;
                let plogp = tape.mul(p, ls)?;
                tape.row_sum(plogp)
            }
            ScoreFn::Gen { gamma, m } => {
                let ls = tape.log_softmax(logits, 1.0)?;
                let top = tape.top_k(ls, m)?;
                let terms = tape.gen_term(top, gamma)?;
                let total = tape.row_sum(terms)?;
                tape.scale(total, -1.0)
            }
            ScoreFn::Ebo { t } => {
                let scaled = tape.scale(logits, 1.0 / t)?;
                let lse = tape.row_logsumexp(scaled)?;
                tape.scale(lse, t)
            }
        }
    }
}

fn check_logits(logits: &[f64]) -> Result<()> {
    if logits.len() < 2 {
        return Err(Error::param(format!(
            "need at least 2 logits, got {}",
            logits.len()
        )));
    }
    if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("logit {i} is {}", logits[i])));
    }
    Ok(())
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("temperature must be > 0, got {t}")))
    }
}

/// `(m, log1p(Σ_{j≠top} e^{v_j − m}))` with `m` the first maximum.
fn split_logsumexp(v: &[f64]) -> (f64, f64) {
    let top = (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
    let m = v[top];
    let rest: f64 = (0..v.len()).filter(|&j| j != top).map(|j| (v[j] - m).exp()).sum();
    (m, rest.ln_1p())
}

fn logsumexp(v: &[f64]) -> f64 {
    let (m, tail) = split_logsumexp(v);
    m + tail
}

/// Log-softmax of `logits / t`.
pub fn log_softmax(logits: &[f64], t: f64) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().map(|&z| z / t).collect();
    let (m, tail) = split_logsumexp(&scaled);
    scaled.iter().map(|&z| (z - m) - tail).collect()
}

/// Maximum softmax probability at temperature `t`.
pub fn msp(logits: &[f64], t: f64) -> Result<f64> {
    check_logits(logits)?;
    check_temperature(t)?;
    let top = log_softmax(logits, t)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(top.exp())
}

/// `Σ pᵢ log pᵢ` with `0 · log 0 = 0`.
pub fn neg_entropy(logits: &[f64]) -> Result<f64> {
    check_logits(logits)?;
    Ok(log_softmax(logits, 1.0)
        .into_iter()
        .map(|lp| {
            let p = lp.exp();
            if p == 0.0 {
                0.0
            } else {
                p * lp
            }
        })
        .sum())
}

/// `−Σ_{j ≤ M} p_jᵞ (1 − p_j)ᵞ` over the `M` largest probabilities.
pub fn gen_score(logits: &[f64], gamma: f64, m: usize) -> Result<f64> {
    check_logits(logits)?;
    ScoreFn::Gen { gamma, m }.validate(logits.len())?;
    let mut lp = log_softmax(logits, 1.0);
    lp.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = lp
        .iter()
        .take(m)
        .map(|&l| gen_term(l, gamma))
        .sum();
    Ok(-total)
}

/// Energy score `t · logsumexp(z / t)`.
pub fn ebo(logits: &[f64], t: f64) -> Result<f64> {
    check_logits(logits)?;
    check_temperature(t)?;
    Ok(t * logsumexp(&logits.iter().map(|&z| z / t).collect::<Vec<_>>()))
}

/// Confirms that `score` is nondecreasing in the margin `a` along the logit
/// family `[a, 0, …, 0]` of length `class_count`, scanning `a ∈ [0, 20]` on
/// a dense grid.
pub fn sign_convention_check(score: ScoreFn, class_count: usize) -> Result<()> {
    const STEPS: usize = 4000;
    score.validate(class_count)?;
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=STEPS {
        let a = 20.0 * i as f64 / STEPS as f64;
        let mut logits = vec![0.0; class_count];
        logits[0] = a;
        let s = score.eval(&logits)?;
        if s < prev - 1e-12 {
            return Err(Error::Contract(format!(
                "{score} decreases with margin at a={a}, C={class_count}: {prev} -> {s}"
            )));
        }
        prev = s;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn msp_examples() {
        close(msp(&[0.0; 10], 1.0).unwrap(), 0.1, 1e-15);
        close(msp(&[2.0, 0.0], 1.0).unwrap(), 0.880797077977882, 1e-12);
        close(msp(&[2.0, 0.0], 1000.0).unwrap(), 0.5005, 1e-6);
    }

    #[test]
    fn msp_t_at_unit_temperature_is_msp() {
        let z = [0.3, -1.2, 2.2];
        assert_eq!(
            ScoreFn::MspT { t: 1.0 }.eval(&z).unwrap(),
            ScoreFn::Msp.eval(&z).unwrap()
        );
    }

    #[test]
    fn entropy_examples() {
        close(neg_entropy(&[0.0; 5]).unwrap(), -(5f64.ln()), 1e-15);
        close(neg_entropy(&[50.0, 0.0, 0.0]).unwrap(), 0.0, 1e-12);
        close(
            neg_entropy(&[0.0, 3f64.ln()]).unwrap(),
            0.25 * 0.25f64.ln() + 0.75 * 0.75f64.ln(),
            1e-15,
        );
        close(neg_entropy(&[0.0, 3f64.ln()]).unwrap(), -0.562335144618808, 1e-12);
    }

    #[test]
    fn gen_examples() {
        close(gen_score(&[0.0, 0.0], 0.1, 2).unwrap(), -1.741101126592248, 1e-12);
        close(gen_score(&[800.0, 0.0, 0.0], 0.3, 3).unwrap(), -2.0 * (-240f64).exp(), 1e-118);
        assert!(gen_score(&(0..10).map(f64::from).collect::<Vec<_>>(), 0.1, 10).is_ok());
        assert!(matches!(
            gen_score(&[0.0, 1.0], 0.1, 3),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn ebo_examples() {
        close(ebo(&[0.0, 0.0], 1.0).unwrap(), 2f64.ln(), 1e-15);
        close(ebo(&[10.0, 0.0], 1.0).unwrap(), 10.000045398899218, 1e-12);
        close(ebo(&[1.0, 1.0, 1.0], 2.0).unwrap(), 3.197224577336219, 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(msp(&[f64::NAN, 0.0], 1.0).is_err());
        assert!(msp(&[1.0], 1.0).is_err());
        assert!(msp(&[1.0, 0.0], 0.0).is_err());
        assert!(ScoreFn::Gen { gamma: 0.0, m: 1 }.validate(3).is_err());
        assert!(ScoreFn::Gen { gamma: 0.1, m: 0 }.validate(3).is_err());
    }

    #[test]
    fn every_score_is_monotone_in_margin() {
        for c in [2, 3, 5, 10, 100] {
            for s in [
                ScoreFn::Msp,
                ScoreFn::MspT { t: 1000.0 },
                ScoreFn::Ent,
                ScoreFn::Gen { gamma: 0.1, m: c },
                ScoreFn::Ebo { t: 1.0 },
            ] {
                sign_convention_check(s, c).unwrap();
            }
        }
    }

    #[test]
    fn truncated_gen_is_not_monotone_near_uniform() {
        // With M < C the top-M terms can grow as the tail probabilities shrink.
        assert!(sign_convention_check(ScoreFn::Gen { gamma: 0.1, m: 2 }, 3).is_err());
    }

    #[test]
    fn tape_route_matches_direct_route() {
        let rows = [
            vec![0.3, -1.2, 2.2, 0.0],
            vec![5.0, 5.0, -3.0, 1.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ];
        let x = Tensor::from_rows(&rows).unwrap();
        for s in [
            ScoreFn::Msp,
            ScoreFn::MspT { t: 3.0 },
            ScoreFn::Ent,
            ScoreFn::Gen { gamma: 0.5, m: 3 },
            ScoreFn::Ebo { t: 2.0 },
        ] {
            let mut tape = Tape::new();
            let v = tape.input(x.clone()).unwrap();
            let out = s.record(&mut tape, v).unwrap();
            for (r, &got) in rows.iter().zip(tape.value(out).data()) {
                close(got, s.eval(r).unwrap(), 1e-14);
            }
        }
    }
}
