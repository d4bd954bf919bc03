mod common;

use common::*;
use pro_ood::pro::{
    delta_z, odin_preprocess_score, pro_score, pro_score_traced, pro_scores, score_shifts, Direction, LinearScore,
    NetScore, ProConfig, ScoreField,
};
use pro_ood::scores::ScoreFn;
use pro_ood::tensor::Tensor;
use proptest::prelude::*;

fn linear(w: Vec<f64>) -> LinearScore {
    LinearScore { w, bias: 0.0 }
}

fn l1(w: &[f64]) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn linear_score_descends_by_k_eps_l1(
        w in prop::collection::vec(-5.0f64..5.0, 1..12),
        seed in any::<u64>(),
        eps in 1e-4f64..0.5,
        k in 0usize..8,
    ) {
        let mut r = rng(seed);
        let x = random_input(&mut r, 1, w.len()).reshape(vec![w.len()]).unwrap();
        let f = linear(w.clone());
        let g = f.score(&x).unwrap()[0];
        let (pro, _) = pro_score(&f, &x, &ProConfig::new(eps, k)).unwrap();
        prop_assert!((pro - (g - k as f64 * eps * l1(&w))).abs() < 1e-9);
        let odin = odin_preprocess_score(&f, &x, eps).unwrap();
        prop_assert!((odin - (g + eps * l1(&w))).abs() < 1e-9);
        prop_assert!((delta_z(&f, &x, eps).unwrap() - eps * l1(&w)).abs() < 1e-9);
    }

    #[test]
    fn trajectory_min_is_below_start_and_prefixes_decrease(seed in any::<u64>(), eps in 1e-4f64..0.3, k in 1usize..8) {
        let mut r = rng(seed);
        let net = random_mlp(&mut r);
        let x = random_input(&mut r, 1, net.input_dim()).reshape(vec![net.input_dim()]).unwrap();
        for score in all_scores(&mut r, net.class_count()) {
            let field = NetScore::new(&net, score).unwrap();
            let (g_star, traj) = pro_score(&field, &x, &ProConfig::new(eps, k)).unwrap();
            prop_assert_eq!(traj.scores.len(), k + 1);
            prop_assert!(g_star <= traj.scores[0]);
            for j in 1..=k {
                prop_assert!(traj.prefix_min(j) <= traj.prefix_min(j - 1));
            }
            prop_assert_eq!(traj.prefix_min(k), g_star);
        }
    }

    #[test]
    fn clamped_iterates_stay_in_the_box(seed in any::<u64>(), k in 1usize..8) {
        let mut r = rng(seed);
        let net = random_mlp(&mut r);
        let x = random_input(&mut r, 1, net.input_dim()).reshape(vec![net.input_dim()]).unwrap();
        let cfg = ProConfig::new(0.4, k).with_clamp(-1.0, 1.0);
        let (_, traj) = pro_score_traced(&NetScore::new(&net, ScoreFn::Msp).unwrap(), &x, &cfg).unwrap();
        for it in &traj.inputs.unwrap()[1..] {
            prop_assert!(it.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn batched_pro_matches_single_samples(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_mlp(&mut r);
        let x = random_input(&mut r, 6, net.input_dim());
        let field = NetScore::new(&net, ScoreFn::Ent).unwrap();
        let cfg = ProConfig::new(0.01, 3);
        let batch = pro_scores(&field, &x, &cfg).unwrap();
        for (i, b) in batch.iter().enumerate() {
            let one = Tensor::vector(x.row(i).to_vec()).unwrap();
            prop_assert_eq!(pro_score(&field, &one, &cfg).unwrap().0, *b);
        }
    }
}

#[test]
fn zero_steps_return_the_clean_score() {
    let f = linear(vec![1.0, 2.0]);
    let x = Tensor::vector(vec![0.5, -0.5]).unwrap();
    let (g, traj) = pro_score(&f, &x, &ProConfig::new(0.1, 0)).unwrap();
    assert_eq!(g, -0.5);
    assert_eq!(traj.scores, vec![-0.5]);
}

#[test]
fn ascent_direction_is_refused() {
    let f = linear(vec![1.0]);
    let x = Tensor::vector(vec![0.0]).unwrap();
    let mut cfg = ProConfig::new(0.1, 2);
    cfg.direction = Direction::Maximize;
    assert!(pro_score(&f, &x, &cfg).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let f = linear(vec![1.0]);
    let x = Tensor::vector(vec![0.0]).unwrap();
    for cfg in [ProConfig::new(0.0, 1), ProConfig::new(-1.0, 1), ProConfig::new(0.1, 65), ProConfig::new(0.1, 1).with_clamp(1.0, -1.0)] {
        assert!(pro_score(&f, &x, &cfg).is_err(), "{cfg:?}");
    }
}

#[test]
fn zero_eps_shift_is_zero() {
    let mut r = rng(9);
    let net = random_mlp(&mut r);
    let x = random_input(&mut r, 10, net.input_dim());
    let s = score_shifts(&NetScore::new(&net, ScoreFn::Msp).unwrap(), &x, 0.0, 1).unwrap();
    assert!(s.iter().all(|&v| v == 0.0));
}
