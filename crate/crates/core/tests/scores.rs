mod common;

use common::rng;
use pro_ood::scores::{sign_convention_check, ScoreFn};
use proptest::prelude::*;
use rand::Rng;

fn logits() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-30.0f64..30.0, 2..20)
}

fn score_for(c: usize, pick: u8) -> ScoreFn {
    match pick % 5 {
        0 => ScoreFn::Msp,
        1 => ScoreFn::MspT { t: 7.0 },
        2 => ScoreFn::Ent,
        3 => ScoreFn::Gen { gamma: 0.1, m: c.min(3) },
        _ => ScoreFn::Ebo { t: 2.0 },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn probability_scores_ignore_a_common_logit_shift(z in logits(), shift in -100.0f64..100.0, pick in 0u8..4) {
        let s = score_for(z.len(), pick);
        let moved: Vec<f64> = z.iter().map(|v| v + shift).collect();
        let (a, b) = (s.eval(&z).unwrap(), s.eval(&moved).unwrap());
        prop_assert!((a - b).abs() <= 1e-12, "{s:?}: {a} vs {b}");
    }

    #[test]
    fn energy_moves_with_the_shift(z in logits(), shift in -100.0f64..100.0) {
        let s = ScoreFn::Ebo { t: 2.0 };
        let moved: Vec<f64> = z.iter().map(|v| v + shift).collect();
        prop_assert!((s.eval(&moved).unwrap() - s.eval(&z).unwrap() - shift).abs() < 1e-9);
    }

    #[test]
    fn two_class_entropy_ranks_like_msp(a in prop::array::uniform2(-20.0f64..20.0), b in prop::array::uniform2(-20.0f64..20.0)) {
        let msp = |z: &[f64]| ScoreFn::Msp.eval(z).unwrap();
        let ent = |z: &[f64]| ScoreFn::Ent.eval(z).unwrap();
        let (ma, mb) = (msp(&a), msp(&b));
        // Distinct confidences must order the same way under both scores.
        if (ma - mb).abs() > 1e-9 {
            prop_assert_eq!(ma > mb, ent(&a) > ent(&b));
        }
    }

    #[test]
    fn scores_are_finite_under_extreme_logits(z in prop::collection::vec(-1e6f64..1e6, 2..10), pick in 0u8..5) {
        let s = score_for(z.len(), pick);
        prop_assert!(s.eval(&z).unwrap().is_finite());
    }
}

#[test]
fn every_score_prefers_confident_logits() {
    for c in [2usize, 3, 5, 10, 100] {
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
fn msp_is_at_least_one_over_c() {
    let mut r = rng(3);
    for _ in 0..1000 {
        let c = r.random_range(2..50);
        let z: Vec<f64> = (0..c).map(|_| r.random_range(-10.0..10.0)).collect();
        assert!(ScoreFn::Msp.eval(&z).unwrap() >= 1.0 / c as f64 - 1e-15);
    }
}
