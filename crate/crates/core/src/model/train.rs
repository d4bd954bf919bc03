//! Mini-batch SGD on cross-entropy, with optional PGD adversarial training.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, Classifier};
use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::tensor::{sign, Tape, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TrainMode {
    Standard,
    /// Trains on L∞ PGD adversarial examples of radius `eps`.
    Adversarial {
        eps: f64,
        pgd_steps: usize,
        pgd_step_size: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Hidden layer widths; input and output widths come from the data.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    #[serde(flatten)]
    pub mode: TrainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
            hidden: vec![32, 32],
            activation: Activation::Relu,
            mode: TrainMode::Standard,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be ≥ 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate must be > 0"));
        }
        if let TrainMode::Adversarial {
            eps,
            pgd_steps,
            pgd_step_size,
        } = self.mode
        {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::param(format!("adversarial eps must be > 0, got {eps}")));
            }
            if pgd_steps == 0 {
                return Err(Error::param("pgd_steps must be ≥ 1"));
            }
            if !(pgd_step_size > 0.0 && pgd_step_size.is_finite()) {
                return Err(Error::param("pgd_step_size must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: Classifier,
    /// Mean loss over the last epoch (adversarial loss in adversarial mode),
    /// or the clean loss of the initialization when `epochs == 0`.
    pub final_loss: f64,
    pub epoch_losses: Vec<f64>,
}

/// Per-row cross-entropy `−log softmax(z)_y` on `tape`.
pub fn per_sample_ce(tape: &mut Tape, logits: Var, labels: &[usize]) -> Result<Var> {
    let ls = tape.log_softmax(logits, 1.0)?;
    let picked = tape.gather(ls, labels.to_vec())?;
    tape.scale(picked, -1.0)
}

/// Mean cross-entropy over rows.
pub fn cross_entropy(tape: &mut Tape, logits: Var, labels: &[usize]) -> Result<Var> {
    let per = per_sample_ce(tape, logits, labels)?;
    let total = tape.sum_all(per)?;
    tape.scale(total, 1.0 / labels.len() as f64)
}

fn ce_and_input_grad(net: &Classifier, x: &Tensor, labels: &[usize]) -> Result<(Vec<f64>, Tensor)> {
    let mut pass = net.forward(x)?;
    let per = per_sample_ce(&mut pass.tape, pass.logits, labels)?;
    let losses = pass.tape.value(per).data().to_vec();
    let total = pass.tape.sum_all(per)?;
    let grad = pass.input_grad(total, 1.0)?;
    Ok((losses, grad))
}

fn ce_only(net: &Classifier, x: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    let mut pass = net.forward(x)?;
    let per = per_sample_ce(&mut pass.tape, pass.logits, labels)?;
    Ok(pass.tape.value(per).data().to_vec())
}

/// L∞ PGD ascent on cross-entropy from the clean point.
///
/// Each step moves by `step_size · sign(∇ₓ CE)` and clamps back into the
/// `eps` ball around `x`. Every iterate, including `x` itself, is a
/// candidate; the highest-loss candidate of each row is returned. `x` may be
/// `[D]` or `[N, D]`.
pub fn pgd_attack(
    net: &Classifier,
    x: &Tensor,
    labels: &[usize],
    eps: f64,
    steps: usize,
    step_size: f64,
) -> Result<Tensor> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::param(format!("PGD eps must be ≥ 0, got {eps}")));
    }
    if eps == 0.0 || steps == 0 {
        return Ok(x.clone());
    }
    let cols = x.cols();
    let mut best = x.data().to_vec();
    let mut best_loss: Option<Vec<f64>> = None;
    let mut cur = x.clone();
    for _ in 0..steps {
        let (losses, grad) = ce_and_input_grad(net, &cur, labels)?;
        keep_best(&mut best, &mut best_loss, &cur, &losses, cols);
        let next: Vec<f64> = cur
            .data()
            .iter()
            .zip(grad.data())
            .zip(x.data())
            .map(|((&c, &g), &x0)| (c + step_size * sign(g)).clamp(x0 - eps, x0 + eps))
            .collect();
        cur = Tensor::new(x.shape().to_vec(), next)?;
    }
    let losses = ce_only(net, &cur, labels)?;
    keep_best(&mut best, &mut best_loss, &cur, &losses, cols);
    Tensor::new(x.shape().to_vec(), best)
}

fn keep_best(
    best: &mut [f64],
    best_loss: &mut Option<Vec<f64>>,
    cur: &Tensor,
    losses: &[f64],
    cols: usize,
) {
    match best_loss {
        None => *best_loss = Some(losses.to_vec()),
        Some(bl) => {
            for (r, (&l, b)) in losses.iter().zip(bl.iter_mut()).enumerate() {
                if l > *b {
                    *b = l;
                    best[r * cols..(r + 1) * cols].copy_from_slice(cur.row(r));
                }
            }
        }
    }
}

fn shuffled(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    idx
}

/// Trains an MLP with plain SGD. Deterministic given `cfg.seed`.
pub fn train(data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    let labels = data.class_indices()?;
    let mut widths = vec![data.dim()];
    widths.extend(&cfg.hidden);
    widths.push(data.class_count);
    let mut net = Classifier::mlp(&widths, cfg.activation, cfg.seed)?;

    if cfg.epochs == 0 {
        let loss = ce_only(&net, &data.x, &labels)?;
        let mean = loss.iter().sum::<f64>() / loss.len() as f64;
        return Ok(TrainOutcome {
            net,
            final_loss: mean,
            epoch_losses: Vec::new(),
        });
    }

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = shuffled(data.len(), cfg.seed, epoch);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = data.x.select_rows(batch)?;
            let yb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let xb = match cfg.mode {
                TrainMode::Standard => xb,
                TrainMode::Adversarial {
                    eps,
                    pgd_steps,
                    pgd_step_size,
                } => pgd_attack(&net, &xb, &yb, eps, pgd_steps, pgd_step_size)
                    .map_err(|e| diverged(e, epoch))?,
            };
            let mut pass = net.forward(&xb).map_err(|e| diverged(e, epoch))?;
            let loss = cross_entropy(&mut pass.tape, pass.logits, &yb).map_err(|e| diverged(e, epoch))?;
            let value = pass.tape.value(loss).item()?;
            let grads = pass.param_grads(loss)?;
            if !value.is_finite() || grads.iter().any(|g| g.w.max_abs().is_nan()) {
                return Err(Error::Divergence { epoch, loss: value });
            }
            total += value * batch.len() as f64;
            for (layer, g) in net.dense_layers_mut().zip(&grads) {
                for (w, dw) in layer.w.iter_mut().zip(g.w.data()) {
                    *w -= cfg.learning_rate * dw;
                }
                for (b, db) in layer.b.iter_mut().zip(g.b.data()) {
                    *b -= cfg.learning_rate * db;
                }
            }
            if net
                .dense_layers()
                .any(|d| d.w.iter().chain(&d.b).any(|v| !v.is_finite()))
            {
                return Err(Error::Divergence { epoch, loss: value });
            }
        }
        epoch_losses.push(total / data.len() as f64);
    }
    Ok(TrainOutcome {
        net,
        final_loss: *epoch_losses.last().unwrap(),
        epoch_losses,
    })
}

fn diverged(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite(_) => Error::Divergence {
            epoch,
            loss: f64::NAN,
        },
        other => other,
    }
}
