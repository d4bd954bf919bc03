//! Behavior of the detectors on the trained desk model.

mod common;

use common::*;
use pro_ood::analysis::{claim1_check, entropy_bound, landscape, shift_histogram, Binning, SampleSet};
use pro_ood::datasets::{gen_blobs, gen_shifted_blobs, Split};
use pro_ood::eval::{auroc, sweep, SweepGrid};
use pro_ood::model::{Activation, Classifier};
use pro_ood::pro::{odin_scores, pro_scores, pro_trajectories, LinearScore, NetScore, ProConfig, ScoreField};
use pro_ood::scores::ScoreFn;
use pro_ood::tensor::Tensor;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn near() -> &'static Tensor {
    &desk().data.suite.ood[0].data.x
}

fn ind() -> &'static Tensor {
    &desk().data.suite.ind_test.x
}

#[test]
fn odin_step_raises_tempered_confidence() {
    let field = NetScore::new(&desk().net, ScoreFn::MspT { t: 1000.0 }).unwrap();
    let plain = field.score(near()).unwrap();
    let moved = odin_scores(&field, near(), 0.0014).unwrap();
    assert!(mean(&moved) > mean(&plain));
}

#[test]
fn some_ood_scores_rise_under_a_descent_step() {
    // A sign step is not a true descent step, so a few scores go up; these
    // are the samples where tracking the minimum matters.
    let field = NetScore::new(&desk().net, ScoreFn::Msp).unwrap();
    let h = shift_histogram(
        &field,
        SampleSet { name: "ind", x: ind() },
        &[SampleSet { name: "near", x: near() }],
        &[0.01],
        Binning::Probability,
    )
    .unwrap();
    assert!(h[0].ood[0].positive_count() > 0);
    assert!(h[0].ood[0].mean() < h[0].ind.mean());
}

#[test]
fn the_last_iterate_is_not_always_the_minimum() {
    let field = NetScore::new(&desk().net, ScoreFn::Msp).unwrap();
    let trajs = pro_trajectories(&field, near(), &ProConfig::new(0.01, 7)).unwrap();
    let early = trajs.iter().filter(|t| *t.scores.last().unwrap() > t.min()).count();
    assert!(early > 0);
    let last: Vec<f64> = trajs.iter().map(|t| *t.scores.last().unwrap()).collect();
    let min: Vec<f64> = trajs.iter().map(|t| t.min()).collect();
    assert!(last.iter().zip(&min).all(|(l, m)| l >= m));
}

#[test]
fn tuned_pro_msp_is_not_worse_than_msp_on_test() {
    let d = desk();
    let s = &d.data.suite;
    let grid = SweepGrid::default();
    let best = sweep(&d.net, ScoreFn::Msp, &grid, &d.data.ind_val.x, &s.ood_val.x).unwrap();
    let base = NetScore::new(&d.net, ScoreFn::Msp).unwrap();
    let base_auc = auroc(&base.score(ind()).unwrap(), &base.score(near()).unwrap()).unwrap();
    let pro_auc = auroc(&best.best.scores(&d.net, ind()).unwrap(), &best.best.scores(&d.net, near()).unwrap()).unwrap();
    assert!(pro_auc >= base_auc - 0.01, "{pro_auc} vs {base_auc}");
}

#[test]
fn pro_scores_sit_below_base_and_drop_more_on_ood() {
    let d = desk();
    for score in [ScoreFn::Msp, ScoreFn::Ent, ScoreFn::Gen { gamma: 0.1, m: 4 }] {
        let field = NetScore::new(&d.net, score).unwrap();
        let cfg = ProConfig::new(0.01, 5);
        let drop = |x: &Tensor| {
            let b = field.score(x).unwrap();
            let p = pro_scores(&field, x, &cfg).unwrap();
            assert!(p.iter().zip(&b).all(|(p, b)| p <= b));
            mean(&b) - mean(&p)
        };
        assert!(drop(near()) > drop(ind()), "{}", score.name());
    }
}

#[test]
fn confidence_bound_holds_on_the_robust_model() {
    let d = desk();
    let r = claim1_check(&d.net, &d.data.suite.ind_test, 0.1, 5).unwrap();
    assert!(r.holds, "{r:?}");
    let clean = claim1_check(&d.net, &d.data.suite.ind_test, 0.0, 0).unwrap();
    assert!(clean.mean_min_msp >= clean.bound);
    assert_eq!(clean.e_hat, clean.clean_ce);
}

#[test]
fn confidence_bound_runs_on_an_untrained_model() {
    let d = desk();
    let net = Classifier::mlp(&[8, 16, 4], Activation::Tanh, 1).unwrap();
    let r = claim1_check(&net, &d.data.suite.ind_test, 0.1, 3).unwrap();
    assert!(r.e_hat.is_finite() && r.mean_min_msp > 0.0);
    assert!(r.e_hat >= r.clean_ce);
}

#[test]
fn zero_shift_is_indistinguishable_from_ind() {
    let spec = pro_ood::datasets::DeskPreset::default().blobs;
    let a = gen_blobs(&spec, 500, 101, Split::Test).unwrap();
    let b = gen_shifted_blobs(&spec, 2000, 0.0, 102).unwrap();
    let field = NetScore::new(&desk().net, ScoreFn::Msp).unwrap();
    let auc = auroc(&field.score(&a.x).unwrap(), &field.score(&b.x).unwrap()).unwrap();
    assert!((auc - 0.5).abs() < 0.03, "{auc}");
}

#[test]
fn landscape_center_is_the_clean_score() {
    let field = NetScore::new(&desk().net, ScoreFn::Msp).unwrap();
    let x = near().select_rows(&[3]).unwrap().reshape(vec![8]).unwrap();
    let g = landscape(&field, &x, 0.5, 11, 4).unwrap();
    assert_eq!(g.center(), field.score(&x).unwrap()[0]);
    assert_eq!(g.z.len(), 11);
    assert!(g.z.iter().all(|r| r.len() == 11));
}

#[test]
fn linear_landscape_is_a_plane() {
    let f = LinearScore {
        w: vec![0.5, -2.0, 1.0],
        bias: 0.25,
    };
    let x = Tensor::vector(vec![1.0, 0.0, -1.0]).unwrap();
    let g = landscape(&f, &x, 1.0, 9, 3).unwrap();
    let g0 = f.score(&x).unwrap()[0];
    let dot = |d: &[f64]| d.iter().zip(&f.w).map(|(a, b)| a * b).sum::<f64>();
    let (a1, a2) = (dot(&g.delta1), dot(&g.delta2));
    for (i, a) in g.alpha.iter().enumerate() {
        for (j, b) in g.beta.iter().enumerate() {
            assert!((g.z[i][j] - (g0 + a * a1 + b * a2)).abs() < 1e-10);
        }
    }
    let flat = LinearScore {
        w: vec![0.0; 3],
        bias: 1.5,
    };
    let g = landscape(&flat, &x, 1.0, 5, 3).unwrap();
    assert!(g.z.iter().flatten().all(|&v| v == 1.5));
}

#[test]
fn shift_histograms_are_reproducible() {
    let field = NetScore::new(&desk().net, ScoreFn::Msp).unwrap();
    let run = || {
        shift_histogram(
            &field,
            SampleSet { name: "ind", x: ind() },
            &[SampleSet { name: "near", x: near() }],
            &[0.001, 0.01],
            Binning::DataDriven,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a[1].to_csv(), b[1].to_csv());
}

#[test]
fn entropy_bound_agrees_with_a_direct_computation() {
    let (c, e) = (10usize, 0.1f64);
    let p = (-e).exp();
    let rest = (1.0 - p) / (c - 1) as f64;
    let direct = p * p.ln() + (c - 1) as f64 * rest * rest.ln();
    assert!((entropy_bound(e, c).unwrap() - direct).abs() < 1e-12);
}
