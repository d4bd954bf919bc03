//! Perturbation-rectified scoring.
//!
//! Given a differentiable score `g`, PRO walks the input downhill with
//! signed-gradient steps `x ← x − ε·sign(∇ₓ g(x))`, records the score at
//! every iterate (including the start), and reports the minimum. In-
//! distribution inputs of a robust model barely move; OOD inputs tend to
//! lose score quickly, which widens the gap between the two populations.
//!
//! The ODIN-direction baseline takes a single ascent step instead and
//! reports the score at the moved point.
//!
//! `sign(0) = 0`, so coordinates with zero gradient stay put.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::parallel::map_row_chunks;
use crate::scores::ScoreFn;
use crate::tensor::{sign, Tensor};

/// Largest step count accepted by the library.
pub const MAX_STEPS: usize = 64;

/// A scalar score over inputs with input gradients, evaluated row-wise.
pub trait ScoreField: Sync {
    fn input_dim(&self) -> usize;

    /// Score of each row of `x` (`[D]` or `[N, D]`).
    fn score(&self, x: &Tensor) -> Result<Vec<f64>>;

    /// Scores plus `∇ₓ g` for each row, gradient shaped like `x`.
    fn score_and_grad(&self, x: &Tensor) -> Result<(Vec<f64>, Tensor)>;
}

/// A classifier composed with a score function of its logits.
#[derive(Debug, Clone, Copy)]
pub struct NetScore<'a> {
    pub net: &'a Classifier,
    pub score: ScoreFn,
}

impl<'a> NetScore<'a> {
    pub fn new(net: &'a Classifier, score: ScoreFn) -> Result<Self> {
        score.validate(net.class_count())?;
        Ok(Self { net, score })
    }
}

impl ScoreField for NetScore<'_> {
    fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn score(&self, x: &Tensor) -> Result<Vec<f64>> {
        let mut pass = self.net.forward(x)?;
        let s = self.score.record(&mut pass.tape, pass.logits)?;
        Ok(pass.tape.value(s).data().to_vec())
    }

    fn score_and_grad(&self, x: &Tensor) -> Result<(Vec<f64>, Tensor)> {
        let mut pass = self.net.forward(x)?;
        let s = self.score.record(&mut pass.tape, pass.logits)?;
        let scores = pass.tape.value(s).data().to_vec();
        let total = pass.tape.sum_all(s)?;
        let grad = pass.input_grad(total, 1.0)?;
        Ok((scores, grad))
    }
}

/// `g(x) = w·x + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScore {
    pub w: Vec<f64>,
    pub bias: f64,
}

impl ScoreField for LinearScore {
    fn input_dim(&self) -> usize {
        self.w.len()
    }

    fn score(&self, x: &Tensor) -> Result<Vec<f64>> {
        check_dim(x, self.w.len())?;
        Ok(x
            .row_iter()
            .map(|r| r.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() + self.bias)
            .collect())
    }

    fn score_and_grad(&self, x: &Tensor) -> Result<(Vec<f64>, Tensor)> {
        let s = self.score(x)?;
        let g: Vec<f64> = (0..x.rows()).flat_map(|_| self.w.iter().copied()).collect();
        Ok((s, Tensor::new(x.shape().to_vec(), g)?))
    }
}

fn check_dim(x: &Tensor, d: usize) -> Result<()> {
    if x.shape().is_empty() || x.shape().len() > 2 || x.cols() != d {
        return Err(Error::dim(format!(
            "input shape {:?} does not match dimension {d}",
            x.shape()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Descend the score (PRO).
    Minimize,
    /// Ascend the score (ODIN-style preprocessing).
    Maximize,
}

/// Per-feature box `[lo, hi]` applied after every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProConfig {
    /// L∞ length of each step.
    pub eps: f64,
    /// Number of steps; `K + 1` scores are recorded.
    pub k: usize,
    pub direction: Direction,
    pub clamp: Option<Clamp>,
}

impl ProConfig {
    pub fn new(eps: f64, k: usize) -> Self {
        Self {
            eps,
            k,
            direction: Direction::Minimize,
            clamp: None,
        }
    }

    pub fn with_clamp(mut self, lo: f64, hi: f64) -> Self {
        self.clamp = Some(Clamp { lo, hi });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param(format!("step length eps must be > 0, got {}", self.eps)));
        }
        if self.k > MAX_STEPS {
            return Err(Error::param(format!("K must be ≤ {MAX_STEPS}, got {}", self.k)));
        }
        if let Some(c) = self.clamp {
            if !(c.lo < c.hi) {
                return Err(Error::param(format!("clamp needs lo < hi, got [{}, {}]", c.lo, c.hi)));
            }
        }
        Ok(())
    }
}

/// Scores along the descent path; `scores[0]` is the unperturbed score.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scores: Vec<f64>,
    /// Iterates `x₀ … x_K`, present only when requested.
    pub inputs: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    /// Minimum recorded score.
    pub fn min(&self) -> f64 {
        self.scores.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Minimum over the first `k + 1` records, i.e. the result PRO would give
    /// with `k` steps.
    pub fn prefix_min(&self, k: usize) -> f64 {
        self.scores[..=k.min(self.scores.len() - 1)]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn step_err(e: Error, step: usize) -> Error {
    match e {
        Error::NonFinite(_) => Error::ScoreDivergence { step },
        other => other,
    }
}

fn check_scores(scores: &[f64], step: usize) -> Result<()> {
    if scores.iter().all(|s| s.is_finite()) {
        Ok(())
    } else {
        Err(Error::ScoreDivergence { step })
    }
}

fn descend(
    field: &dyn ScoreField,
    x: &Tensor,
    cfg: &ProConfig,
    keep_inputs: bool,
) -> Result<Vec<Trajectory>> {
    let rows = x.rows();
    let cols = x.cols();
    let mut trajs: Vec<Trajectory> = (0..rows)
        .map(|_| Trajectory {
            scores: Vec::with_capacity(cfg.k + 1),
            inputs: keep_inputs.then(Vec::new),
        })
        .collect();
    let mut cur = x.clone();
    for t in 0..=cfg.k {
        if keep_inputs {
            for (r, tr) in trajs.iter_mut().enumerate() {
                tr.inputs.as_mut().unwrap().push(cur.row(r).to_vec());
            }
        }
        let scores = if t < cfg.k {
            let (scores, grad) = field.score_and_grad(&cur).map_err(|e| step_err(e, t))?;
            check_scores(&scores, t)?;
            let next = cur
                .data()
                .iter()
                .zip(grad.data())
                .map(|(&v, &g)| {
                    let moved = v - cfg.eps * sign(g);
                    match cfg.clamp {
                        Some(c) => moved.clamp(c.lo, c.hi),
                        None => moved,
                    }
                })
                .collect();
            cur = Tensor::new(cur.shape().to_vec(), next).map_err(|e| step_err(e, t + 1))?;
            scores
        } else {
            let scores = field.score(&cur).map_err(|e| step_err(e, t))?;
            check_scores(&scores, t)?;
            scores
        };
        for (tr, s) in trajs.iter_mut().zip(scores) {
            tr.scores.push(s);
        }
    }
    debug_assert!(trajs.iter().all(|t| t.scores.len() == cfg.k + 1));
    debug_assert_eq!(cur.cols(), cols);
    Ok(trajs)
}

fn require_minimize(cfg: &ProConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.direction != Direction::Minimize {
        return Err(Error::Contract(
            "PRO descends the score; use odin_preprocess_score for ascent".into(),
        ));
    }
    Ok(())
}

/// PRO score of one sample `x: [D]`: the minimum of `g` over the `K`-step
/// signed-gradient descent path, plus the full score record.
pub fn pro_score(field: &dyn ScoreField, x: &Tensor, cfg: &ProConfig) -> Result<(f64, Trajectory)> {
    require_minimize(cfg)?;
    if x.shape().len() != 1 {
        return Err(Error::dim(format!("pro_score takes one sample, got {:?}", x.shape())));
    }
    let traj = descend(field, x, cfg, false)?.pop().unwrap();
    Ok((traj.min(), traj))
}

/// [`pro_score`] with every intermediate input recorded.
pub fn pro_score_traced(
    field: &dyn ScoreField,
    x: &Tensor,
    cfg: &ProConfig,
) -> Result<(f64, Trajectory)> {
    require_minimize(cfg)?;
    if x.shape().len() != 1 {
        return Err(Error::dim(format!("pro_score takes one sample, got {:?}", x.shape())));
    }
    let traj = descend(field, x, cfg, true)?.pop().unwrap();
    Ok((traj.min(), traj))
}

/// Trajectories for every row of `x: [N, D]`. Rows are processed
/// independently, so results match per-sample [`pro_score`] calls.
pub fn pro_trajectories(field: &dyn ScoreField, x: &Tensor, cfg: &ProConfig) -> Result<Vec<Trajectory>> {
    require_minimize(cfg)?;
    map_row_chunks(x, |chunk| descend(field, chunk, cfg, false))
}

/// PRO scores for every row of `x`.
pub fn pro_scores(field: &dyn ScoreField, x: &Tensor, cfg: &ProConfig) -> Result<Vec<f64>> {
    Ok(pro_trajectories(field, x, cfg)?.iter().map(Trajectory::min).collect())
}

fn signed_step(field: &dyn ScoreField, x: &Tensor, eps: f64, ascend: bool) -> Result<(Vec<f64>, Tensor)> {
    let (scores, grad) = field.score_and_grad(x)?;
    let dir = if ascend { 1.0 } else { -1.0 };
    let moved = x
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&v, &g)| v + dir * eps * sign(g))
        .collect();
    Ok((scores, Tensor::new(x.shape().to_vec(), moved)?))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("eps must be ≥ 0, got {eps}")))
    }
}

/// ODIN-direction baseline for every row: one ascent step
/// `x + ε·sign(∇ₓ g)`, then the score at the moved point.
pub fn odin_scores(field: &dyn ScoreField, x: &Tensor, eps: f64) -> Result<Vec<f64>> {
    check_eps(eps)?;
    map_row_chunks(x, |chunk| {
        if eps == 0.0 {
            return field.score(chunk);
        }
        let (_, moved) = signed_step(field, chunk, eps, true)?;
        field.score(&moved)
    })
}

/// [`odin_scores`] for one sample.
pub fn odin_preprocess_score(field: &dyn ScoreField, x: &Tensor, eps: f64) -> Result<f64> {
    Ok(odin_scores(field, x, eps)?[0])
}

/// Signed score change `g(x_s) − g(x)` after `steps` descent steps of
/// length `eps`, for every row.
pub fn score_shifts(field: &dyn ScoreField, x: &Tensor, eps: f64, steps: usize) -> Result<Vec<f64>> {
    check_eps(eps)?;
    map_row_chunks(x, |chunk| {
        let base = field.score(chunk)?;
        if eps == 0.0 || steps == 0 {
            return Ok(vec![0.0; base.len()]);
        }
        let mut cur = chunk.clone();
        for _ in 0..steps {
            cur = signed_step(field, &cur, eps, false)?.1;
        }
        let end = field.score(&cur)?;
        Ok(end.iter().zip(&base).map(|(e, b)| e - b).collect())
    })
}

/// `|g(x) − g(x + δ)|` with `δ` from `steps` signed descent steps, per row.
///
/// This is a lower bound on the worst-case change within the L∞ ball; the
/// exact maximum is a nonconvex problem and is not attempted.
pub fn delta_zs(field: &dyn ScoreField, x: &Tensor, eps: f64, steps: usize) -> Result<Vec<f64>> {
    Ok(score_shifts(field, x, eps, steps)?
        .into_iter()
        .map(f64::abs)
        .collect())
}

/// One-sample [`delta_zs`] with a single step.
pub fn delta_z(field: &dyn ScoreField, x: &Tensor, eps: f64) -> Result<f64> {
    Ok(delta_zs(field, x, eps, 1)?[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessGap {
    pub mean_dz_ind: f64,
    pub mean_dz_ood: f64,
    /// `mean_dz_ood − mean_dz_ind`; positive when OOD scores are less robust.
    pub gap: f64,
    pub dz_ind: Vec<f64>,
    pub dz_ood: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean one-step score change on IND versus OOD samples.
pub fn robustness_gap(field: &dyn ScoreField, ind: &Tensor, ood: &Tensor, eps: f64) -> Result<RobustnessGap> {
    if ind.is_empty() || ood.is_empty() {
        return Err(Error::Empty("robustness gap needs non-empty sets".into()));
    }
    let dz_ind = delta_zs(field, ind, eps, 1)?;
    let dz_ood = delta_zs(field, ood, eps, 1)?;
    let (mean_dz_ind, mean_dz_ood) = (mean(&dz_ind), mean(&dz_ood));
    Ok(RobustnessGap {
        mean_dz_ind,
        mean_dz_ood,
        gap: mean_dz_ood - mean_dz_ind,
        dz_ind,
        dz_ood,
    })
}
