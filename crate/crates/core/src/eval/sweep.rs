//! Validation-set search over PRO hyperparameters.
//!
//! Every combination of the grid is scored on IND validation versus OOD
//! validation samples; the highest AUROC wins, ties going to the smaller
//! `K` and then the smaller `ε`. For one (score, ε) pair a single
//! `K_max`-step run yields every `K ≤ K_max` through trajectory prefixes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::detector::DetectorSpec;
use super::metrics::auroc;
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::pro::{pro_trajectories, NetScore, ProConfig};
use crate::scores::ScoreFn;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub eps: Vec<f64>,
    pub k: Vec<usize>,
    /// Temperatures for MSP-T / EBO; empty keeps the base score's own.
    #[serde(default)]
    pub t: Vec<f64>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub m: Vec<usize>,
}

impl Default for SweepGrid {
    /// ε spread over `[5e-5, 1e-2]`, `K ∈ {1, 3, 5, 7}`.
    fn default() -> Self {
        Self {
            eps: vec![5e-5, 1e-4, 3e-4, 5e-4, 1e-3, 3e-3, 5e-3, 1e-2],
            k: vec![1, 3, 5, 7],
            t: Vec::new(),
            gamma: Vec::new(),
            m: Vec::new(),
        }
    }
}

impl SweepGrid {
    pub fn singleton(eps: f64, k: usize) -> Self {
        Self {
            eps: vec![eps],
            k: vec![k],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() || self.k.is_empty() {
            return Err(Error::param("sweep grid needs at least one ε and one K"));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::param(format!("sweep ε must be > 0, got {e}")));
        }
        if self.k.contains(&0) {
            return Err(Error::param("sweep K must be ≥ 1"));
        }
        Ok(())
    }

    /// Every score-function variant this grid spans around `base`.
    fn score_variants(&self, base: ScoreFn, class_count: usize) -> Result<Vec<ScoreFn>> {
        let variants = match base {
            ScoreFn::Msp | ScoreFn::Ent => vec![base],
            ScoreFn::MspT { .. } | ScoreFn::Ebo { .. } if self.t.is_empty() => vec![base],
            ScoreFn::MspT { .. } => self.t.iter().map(|&t| ScoreFn::MspT { t }).collect(),
            ScoreFn::Ebo { .. } => self.t.iter().map(|&t| ScoreFn::Ebo { t }).collect(),
            ScoreFn::Gen { gamma, m } => {
                let gammas = if self.gamma.is_empty() { vec![gamma] } else { self.gamma.clone() };
                let ms = if self.m.is_empty() { vec![m] } else { self.m.clone() };
                let mut out = Vec::new();
                for &g in &gammas {
                    for &mm in &ms {
                        out.push(ScoreFn::Gen {
                            gamma: g,
                            m: mm.min(class_count),
                        });
                    }
                }
                out.dedup();
                out
            }
        };
        for v in &variants {
            v.validate(class_count)?;
        }
        Ok(variants)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub score: ScoreFn,
    pub eps: f64,
    pub k: usize,
    pub auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best: DetectorSpec,
    pub best_auroc: f64,
    pub table: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("score,eps,k,t,gamma,m,auroc\n");
        for r in &self.table {
            let t = r.score.temperature().map(|t| format!("{t:.6}")).unwrap_or_default();
            let (g, m) = match r.score {
                ScoreFn::Gen { gamma, m } => (format!("{gamma:.6}"), m.to_string()),
                _ => (String::new(), String::new()),
            };
            writeln!(out, "{},{:.6},{},{t},{g},{m},{:.6}", r.score.name(), r.eps, r.k, r.auroc).unwrap();
        }
        out
    }
}

fn better(a: &SweepRow, b: &SweepRow) -> bool {
    if a.auroc != b.auroc {
        return a.auroc > b.auroc;
    }
    if a.k != b.k {
        return a.k < b.k;
    }
    a.eps < b.eps
}

/// Picks the PRO configuration around `base` with the best validation AUROC.
pub fn sweep(
    net: &Classifier,
    base: ScoreFn,
    grid: &SweepGrid,
    ind_val: &Tensor,
    ood_val: &Tensor,
) -> Result<SweepResult> {
    grid.validate()?;
    let k_max = *grid.k.iter().max().unwrap();
    let mut table = Vec::new();
    for score in grid.score_variants(base, net.class_count())? {
        let field = NetScore::new(net, score)?;
        for &eps in &grid.eps {
            let cfg = ProConfig::new(eps, k_max);
            let ind = pro_trajectories(&field, ind_val, &cfg)?;
            let ood = pro_trajectories(&field, ood_val, &cfg)?;
            for &k in &grid.k {
                let si: Vec<f64> = ind.iter().map(|t| t.prefix_min(k)).collect();
                let so: Vec<f64> = ood.iter().map(|t| t.prefix_min(k)).collect();
                table.push(SweepRow {
                    score,
                    eps,
                    k,
                    auroc: auroc(&si, &so)?,
                });
            }
        }
    }
    let mut best = &table[0];
    for row in &table[1..] {
        if better(row, best) {
            best = row;
        }
    }
    Ok(SweepResult {
        best: DetectorSpec::Pro {
            score: best.score,
            cfg: ProConfig::new(best.eps, best.k),
        },
        best_auroc: best.auroc,
        table,
    })
}
