use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::map_row_chunks;
use crate::pro::ScoreField;
use crate::tensor::Tensor;

/// Scores on the plane `x + α·δ₁ + β·δ₂` spanned by two random directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `z[i][j] = g(x + alpha[i]·δ₁ + beta[j]·δ₂)`.
    pub z: Vec<Vec<f64>>,
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    pub seed: u64,
}

/// `n` points on `[−h, h]` whose middle entry is exactly zero.
fn symmetric_axis(half_range: f64, n: usize) -> Vec<f64> {
    let c = (n / 2) as f64;
    (0..n)
        .map(|i| if n == 1 { 0.0 } else { half_range * (i as f64 - c) / c })
        .collect()
}

fn unit_linf_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let m = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if m > 0.0 {
            return v.into_iter().map(|x| x / m).collect();
        }
    }
}

/// Evaluates `field` on a `grid_n × grid_n` grid around `x: [D]`.
///
/// `δ₁` and `δ₂` are standard normal draws rescaled to unit L∞ norm, so α
/// and β share units with a perturbation radius. `grid_n` must be odd.
pub fn landscape(
    field: &dyn ScoreField,
    x: &Tensor,
    half_range: f64,
    grid_n: usize,
    seed: u64,
) -> Result<LandscapeGrid> {
    if grid_n.is_multiple_of(2) {
        return Err(Error::param(format!(
            "grid_n must be odd so the grid has a center, got {grid_n}"
        )));
    }
    if !(half_range >= 0.0 && half_range.is_finite()) {
        return Err(Error::param(format!("half_range must be ≥ 0, got {half_range}")));
    }
    let d = field.input_dim();
    if x.shape() != [d] {
        return Err(Error::dim(format!(
            "landscape takes one sample of dimension {d}, got {:?}",
            x.shape()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta1 = unit_linf_direction(&mut rng, d);
    let delta2 = unit_linf_direction(&mut rng, d);
    let alpha = symmetric_axis(half_range, grid_n);
    let beta = alpha.clone();

    let mut points = Vec::with_capacity(grid_n * grid_n * d);
    for &a in &alpha {
        for &b in &beta {
            for k in 0..d {
                points.push(x.data()[k] + a * delta1[k] + b * delta2[k]);
            }
        }
    }
    let points = Tensor::matrix(grid_n * grid_n, d, points)?;
    let flat = map_row_chunks(&points, |chunk| field.score(chunk))?;
    let z = flat.chunks(grid_n).map(<[f64]>::to_vec).collect();
    Ok(LandscapeGrid {
        alpha,
        beta,
        z,
        delta1,
        delta2,
        seed,
    })
}

impl LandscapeGrid {
    pub fn center(&self) -> f64 {
        let c = self.alpha.len() / 2;
        self.z[c][c]
    }

    /// Header `alpha\beta,β₀,…`, then one row per α.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha\\beta");
        for b in &self.beta {
            write!(out, ",{b}").unwrap();
        }
        out.push('\n');
        for (a, row) in self.alpha.iter().zip(&self.z) {
            write!(out, "{a}").unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}
