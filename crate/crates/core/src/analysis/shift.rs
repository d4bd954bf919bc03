use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::DetectorSpec;
use crate::model::Classifier;
use crate::pro::{score_shifts, ScoreField};
use crate::tensor::Tensor;

/// Number of histogram bins.
pub const SHIFT_BINS: usize = 61;

/// How histogram edges are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// `[−1, 1]`, for probability-valued scores.
    Probability,
    /// Observed min/max over every set at that ε.
    DataDriven,
}

/// Named sample set.
#[derive(Debug, Clone, Copy)]
pub struct SampleSet<'a> {
    pub name: &'a str,
    pub x: &'a Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSeries {
    pub set: String,
    pub shifts: Vec<f64>,
    pub counts: Vec<u64>,
}

impl ShiftSeries {
    pub fn mean(&self) -> f64 {
        self.shifts.iter().sum::<f64>() / self.shifts.len() as f64
    }

    pub fn positive_count(&self) -> usize {
        self.shifts.iter().filter(|&&s| s > 0.0).count()
    }
}

/// One-step shifts at a single ε, IND first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftHistogram {
    pub eps: f64,
    /// `SHIFT_BINS + 1` edges.
    pub edges: Vec<f64>,
    pub ind: ShiftSeries,
    pub ood: Vec<ShiftSeries>,
}

fn bin_counts(values: &[f64], lo: f64, hi: f64) -> Vec<u64> {
    let mut counts = vec![0u64; SHIFT_BINS];
    let width = (hi - lo) / SHIFT_BINS as f64;
    for &v in values {
        let b = ((v - lo) / width).floor();
        let b = if b < 0.0 { 0 } else { (b as usize).min(SHIFT_BINS - 1) };
        counts[b] += 1;
    }
    counts
}

/// Score change `g(x − ε·sign(∇ₓg)) − g(x)` for every sample, binned.
pub fn shift_histogram(
    field: &dyn ScoreField,
    ind: SampleSet<'_>,
    ood: &[SampleSet<'_>],
    eps_list: &[f64],
    binning: Binning,
) -> Result<Vec<ShiftHistogram>> {
    if eps_list.is_empty() {
        return Err(Error::param("shift histogram needs at least one ε"));
    }
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let raw_ind = score_shifts(field, ind.x, eps, 1)?;
        let raw_ood = ood
            .iter()
            .map(|s| score_shifts(field, s.x, eps, 1))
            .collect::<Result<Vec<_>>>()?;
        let (lo, hi) = match binning {
            Binning::Probability => (-1.0, 1.0),
            Binning::DataDriven => {
                let all = raw_ind.iter().chain(raw_ood.iter().flatten());
                let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                if lo < hi {
                    (lo, hi)
                } else {
                    (lo - 0.5, hi + 0.5)
                }
            }
        };
        let edges = (0..=SHIFT_BINS)
            .map(|i| lo + (hi - lo) * i as f64 / SHIFT_BINS as f64)
            .collect();
        let series = |set: &str, shifts: Vec<f64>| ShiftSeries {
            set: set.to_string(),
            counts: bin_counts(&shifts, lo, hi),
            shifts,
        };
        out.push(ShiftHistogram {
            eps,
            edges,
            ind: series(ind.name, raw_ind),
            ood: ood.iter().zip(raw_ood).map(|(s, r)| series(s.name, r)).collect(),
        });
    }
    Ok(out)
}

impl ShiftHistogram {
    /// `bin_lo,bin_hi,count_ind,count_ood_<name>…`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count_ind");
        for s in &self.ood {
            write!(out, ",count_ood_{}", s.set).unwrap();
        }
        out.push('\n');
        for b in 0..SHIFT_BINS {
            write!(out, "{:.6},{:.6},{}", self.edges[b], self.edges[b + 1], self.ind.counts[b]).unwrap();
            for s in &self.ood {
                write!(out, ",{}", s.counts[b]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Raw per-sample values: `set,index,shift`.
    pub fn raw_csv(&self) -> String {
        let mut out = String::from("set,index,shift\n");
        for s in std::iter::once(&self.ind).chain(&self.ood) {
            for (i, v) in s.shifts.iter().enumerate() {
                writeln!(out, "{},{i},{v}", s.set).unwrap();
            }
        }
        out
    }
}

/// Scores of a base detector and its PRO counterpart on the same samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub base: String,
    pub pro: String,
    /// `(set, base scores, PRO scores)`.
    pub sets: Vec<(String, Vec<f64>, Vec<f64>)>,
}

/// Emits both score vectors of every `(base, pro)` pair on every set.
pub fn score_distributions(
    net: &Classifier,
    pairs: &[(DetectorSpec, DetectorSpec)],
    sets: &[SampleSet<'_>],
) -> Result<Vec<ScorePair>> {
    pairs
        .iter()
        .map(|(base, pro)| {
            let sets = sets
                .iter()
                .map(|s| Ok((s.name.to_string(), base.scores(net, s.x)?, pro.scores(net, s.x)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(ScorePair {
                base: base.name(),
                pro: pro.name(),
                sets,
            })
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl ScorePair {
    /// `set,index,base,pro` with full-precision values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("set,index,base,pro\n");
        for (set, b, p) in &self.sets {
            for (i, (x, y)) in b.iter().zip(p).enumerate() {
                writeln!(out, "{set},{i},{x},{y}").unwrap();
            }
        }
        out
    }

    /// Mean base score, mean PRO score and their difference per set.
    pub fn summary(&self) -> Vec<(String, f64, f64, f64)> {
        self.sets
            .iter()
            .map(|(s, b, p)| {
                let (mb, mp) = (mean(b), mean(p));
                (s.clone(), mb, mp, mb - mp)
            })
            .collect()
    }
}
