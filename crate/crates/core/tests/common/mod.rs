//! Reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use pro_ood::datasets::{DeskData, DeskPreset};
use pro_ood::experiment::desk_train_config;
use pro_ood::model::{train, Activation, Classifier, Layer};
use pro_ood::pro::{NetScore, ScoreField};
use pro_ood::scores::ScoreFn;
use pro_ood::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain-loop forward pass, independent of the tape.
pub fn ref_logits(net: &Classifier, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for layer in net.layers() {
        h = match layer {
            Layer::Dense(d) => (0..d.out_dim)
                .map(|o| d.b[o] + (0..d.in_dim).map(|i| d.w[o * d.in_dim + i] * h[i]).sum::<f64>())
                .collect(),
            Layer::Relu => h.iter().map(|v| v.max(0.0)).collect(),
            Layer::Tanh => h.iter().map(|v| v.tanh()).collect(),
        };
    }
    h
}

fn softmax(z: &[f64], t: f64) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| ((v - m) / t).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Scores written out from their textbook definitions.
pub fn ref_score(score: ScoreFn, z: &[f64]) -> f64 {
    match score {
        ScoreFn::Msp => softmax(z, 1.0).into_iter().fold(0.0, f64::max),
        ScoreFn::MspT { t } => softmax(z, t).into_iter().fold(0.0, f64::max),
        ScoreFn::Ent => softmax(z, 1.0).iter().map(|p| if *p > 0.0 { p * p.ln() } else { 0.0 }).sum(),
        ScoreFn::Gen { gamma, m } => {
            let mut p = softmax(z, 1.0);
            p.sort_by(|a, b| b.partial_cmp(a).unwrap());
            -p[..m].iter().map(|p| p.powf(gamma) * (1.0 - p).powf(gamma)).sum::<f64>()
        }
        ScoreFn::Ebo { t } => {
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + t * z.iter().map(|v| ((v - m) / t).exp()).sum::<f64>().ln()
        }
    }
}

/// Random MLP with D ≤ 16, C ≤ 10 and one to three dense layers.
pub fn random_mlp(rng: &mut ChaCha8Rng) -> Classifier {
    let d = rng.random_range(1..=16);
    let c = rng.random_range(2..=10);
    let hidden = rng.random_range(0..=2);
    let mut widths = vec![d];
    for _ in 0..hidden {
        widths.push(rng.random_range(2..=12));
    }
    widths.push(c);
    let act = if rng.random_bool(0.5) { Activation::Tanh } else { Activation::Relu };
    Classifier::mlp(&widths, act, rng.random()).unwrap()
}

pub fn random_input(rng: &mut ChaCha8Rng, rows: usize, d: usize) -> Tensor {
    Tensor::matrix(rows, d, (0..rows * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

/// Every score function, with parameters drawn for `c` classes.
pub fn all_scores(rng: &mut ChaCha8Rng, c: usize) -> Vec<ScoreFn> {
    vec![
        ScoreFn::Msp,
        ScoreFn::MspT { t: rng.random_range(0.5..20.0) },
        ScoreFn::Ent,
        ScoreFn::Gen { gamma: rng.random_range(0.05..0.5), m: rng.random_range(1..=c) },
        ScoreFn::Ebo { t: rng.random_range(0.5..5.0) },
    ]
}

/// Smallest |pre-activation| of any hidden unit over the rows of `x`.
pub fn min_preactivation(net: &Classifier, x: &Tensor) -> f64 {
    let mut best = f64::INFINITY;
    for row in x.row_iter() {
        let mut h = row.to_vec();
        let layers = net.layers();
        for (i, layer) in layers.iter().enumerate() {
            match layer {
                Layer::Dense(d) => {
                    h = (0..d.out_dim)
                        .map(|o| d.b[o] + (0..d.in_dim).map(|k| d.w[o * d.in_dim + k] * h[k]).sum::<f64>())
                        .collect();
                    if i + 1 < layers.len() {
                        best = h.iter().fold(best, |b, v| b.min(v.abs()));
                    }
                }
                Layer::Relu => h = h.iter().map(|v| v.max(0.0)).collect(),
                Layer::Tanh => h = h.iter().map(|v| v.tanh()).collect(),
            }
        }
    }
    best
}

/// Smallest gap between the `m`-th and `m+1`-th sorted logits (ties make
/// MSP and top-M GEN non-differentiable).
pub fn min_rank_gap(net: &Classifier, x: &Tensor) -> f64 {
    x.row_iter()
        .map(|r| {
            let mut z = ref_logits(net, r);
            z.sort_by(|a, b| b.partial_cmp(a).unwrap());
            z.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Denominator floor of the gradient checks: entries below it are compared
/// absolutely.
pub const GRAD_FLOOR: f64 = 1e-4;
pub const FD_STEP: f64 = 1e-5;

/// Sum of the reference score over rows.
fn ref_total(net: &Classifier, score: ScoreFn, x: &Tensor) -> f64 {
    x.row_iter().map(|r| ref_score(score, &ref_logits(net, r))).sum()
}

/// Worst relative error of tape input and weight gradients against central
/// differences of the reference forward pass, over every score function.
pub fn gradient_check(net: &Classifier, x: &Tensor, scores: &[ScoreFn]) -> f64 {
    let h = FD_STEP;
    let mut worst = 0.0f64;
    for &score in scores {
        let field = NetScore::new(net, score).unwrap();
        let (_, gx) = field.score_and_grad(x).unwrap();
        for i in 0..x.len() {
            let bump = |d: f64| {
                let mut v = x.data().to_vec();
                v[i] += d;
                ref_total(net, score, &Tensor::new(x.shape().to_vec(), v).unwrap())
            };
            let fd = (bump(h) - bump(-h)) / (2.0 * h);
            worst = worst.max(rel_err(fd, gx.data()[i], GRAD_FLOOR));
        }

        let mut pass = net.forward(x).unwrap();
        let s = score.record(&mut pass.tape, pass.logits).unwrap();
        let total = pass.tape.sum_all(s).unwrap();
        let grads = pass.param_grads(total).unwrap();
        let dense_idx: Vec<usize> = net
            .layers()
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::Dense(_)))
            .map(|(i, _)| i)
            .collect();
        for (li, g) in dense_idx.iter().zip(&grads) {
            let Layer::Dense(d) = &net.layers()[*li] else { unreachable!() };
            for (which, n, analytic) in [(0, d.w.len(), g.w.data()), (1, d.b.len(), g.b.data())] {
                for k in 0..n {
                    let bump = |delta: f64| {
                        let mut layers = net.layers().to_vec();
                        let Layer::Dense(dd) = &mut layers[*li] else { unreachable!() };
                        if which == 0 {
                            dd.w[k] += delta;
                        } else {
                            dd.b[k] += delta;
                        }
                        let moved = Classifier::new(net.input_dim(), net.class_count(), layers).unwrap();
                        ref_total(&moved, score, x)
                    };
                    let fd = (bump(h) - bump(-h)) / (2.0 * h);
                    worst = worst.max(rel_err(fd, analytic[k], GRAD_FLOOR));
                }
            }
        }
    }
    worst
}

/// Random net and input away from ReLU kinks and logit ties.
pub fn smooth_case(rng: &mut ChaCha8Rng, rows: usize) -> (Classifier, Tensor) {
    loop {
        let net = random_mlp(rng);
        let x = random_input(rng, rows, net.input_dim());
        if min_preactivation(&net, &x) > 1e-3 && min_rank_gap(&net, &x) > 1e-3 {
            return (net, x);
        }
    }
}

pub struct Desk {
    pub data: DeskData,
    pub net: Classifier,
    pub final_loss: f64,
}

/// Desk suite at seed 7 with the adversarially trained model, built once
/// per test binary.
pub fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let data = DeskPreset::default().generate(7).unwrap();
        let out = train(&data.train, &desk_train_config(7)).unwrap();
        Desk {
            data,
            net: out.net,
            final_loss: out.final_loss,
        }
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// AUROC by counting every IND/OOD pair, ties as one half.
pub fn pairwise_auroc(ind: &[f64], ood: &[f64]) -> f64 {
    let mut u = 0.0;
    for a in ind {
        for b in ood {
            if a > b {
                u += 1.0;
            } else if a == b {
                u += 0.5;
            }
        }
    }
    u / (ind.len() as f64 * ood.len() as f64)
}

/// Scans IND scores for the smallest `c` with at least 5% of IND at or
/// below it, then counts OOD at or above.
pub fn scan_fpr95(ind: &[f64], ood: &[f64]) -> f64 {
    let n = ind.len();
    let mut tau = f64::INFINITY;
    for &c in ind {
        let below = ind.iter().filter(|&&s| s <= c).count();
        if 20 * below >= n && c < tau {
            tau = c;
        }
    }
    ood.iter().filter(|&&s| s >= tau).count() as f64 / ood.len() as f64
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}
