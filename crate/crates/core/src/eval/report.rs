use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::detector::{Detector, HyperParams};
use super::metrics::{auroc, fpr_at_tpr};
use crate::datasets::{OodGroup, OodSuite};
use crate::error::Result;

/// Target IND recall for the FPR metric.
pub const TPR_TARGET: f64 = 0.95;

/// Metrics for one (detector, OOD set) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub detector: String,
    pub dataset: String,
    pub group: OodGroup,
    pub auroc: f64,
    pub fpr95: f64,
    pub hyper: HyperParams,
    pub n_ind: usize,
    pub n_ood: usize,
}

/// Unweighted mean over the OOD sets of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAverage {
    pub detector: String,
    pub group: OodGroup,
    pub auroc: f64,
    pub fpr95: f64,
    pub sets: usize,
}

/// Raw scores behind a detector's rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVectors {
    pub detector: String,
    pub ind: Vec<f64>,
    pub ood: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub averages: Vec<GroupAverage>,
    pub scores: Vec<ScoreVectors>,
}

/// Scores IND test once and every OOD set once, then computes metrics.
pub fn evaluate_detector(det: &dyn Detector, suite: &OodSuite) -> Result<(Vec<EvalRow>, ScoreVectors)> {
    let name = det.name();
    let ind = det.scores(&suite.ind_test.x)?;
    let mut rows = Vec::with_capacity(suite.ood.len());
    let mut ood_scores = Vec::with_capacity(suite.ood.len());
    for set in &suite.ood {
        let ood = det.scores(&set.data.x)?;
        rows.push(EvalRow {
            detector: name.clone(),
            dataset: set.name.clone(),
            group: set.group,
            auroc: auroc(&ind, &ood)?,
            fpr95: fpr_at_tpr(&ind, &ood, TPR_TARGET)?,
            hyper: det.hyper(),
            n_ind: ind.len(),
            n_ood: ood.len(),
        });
        ood_scores.push((set.name.clone(), ood));
    }
    Ok((
        rows,
        ScoreVectors {
            detector: name,
            ind,
            ood: ood_scores,
        },
    ))
}

/// Runs every detector over the suite, in the given order.
pub fn evaluate_suite(detectors: &[&dyn Detector], suite: &OodSuite) -> Result<EvalReport> {
    let mut report = EvalReport::default();
    for det in detectors {
        let (rows, scores) = evaluate_detector(*det, suite)?;
        for group in [OodGroup::Near, OodGroup::Far] {
            let members: Vec<&EvalRow> = rows.iter().filter(|r| r.group == group).collect();
            if members.is_empty() {
                continue;
            }
            let n = members.len() as f64;
            report.averages.push(GroupAverage {
                detector: det.name(),
                group,
                auroc: members.iter().map(|r| r.auroc).sum::<f64>() / n,
                fpr95: members.iter().map(|r| r.fpr95).sum::<f64>() / n,
                sets: members.len(),
            });
        }
        report.rows.extend(rows);
        report.scores.push(scores);
    }
    Ok(report)
}

fn opt_f(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn opt_u(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const CSV_HEADER: &str = "detector,dataset,group,auroc,fpr95,eps,k,t,gamma,m,n_ind,n_ood";

impl EvalReport {
    pub fn row(&self, detector: &str, dataset: &str) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| r.detector == detector && r.dataset == dataset)
    }

    pub fn average(&self, detector: &str, group: OodGroup) -> Option<&GroupAverage> {
        self.averages
            .iter()
            .find(|a| a.detector == detector && a.group == group)
    }

    /// One line per (detector, dataset) with six-decimal floats. Hyper-
    /// parameters that do not apply are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let h = &r.hyper;
            writeln!(
                out,
                "{},{},{},{:.6},{:.6},{},{},{},{},{},{},{}",
                r.detector,
                r.dataset,
                r.group.as_str(),
                r.auroc,
                r.fpr95,
                opt_f(h.eps),
                opt_u(h.k),
                opt_f(h.t),
                opt_f(h.gamma),
                opt_u(h.m),
                r.n_ind,
                r.n_ood
            )
            .unwrap();
        }
        out
    }

    /// Plain-text table: one line per detector, FPR@95 / AUROC (percent) per
    /// OOD set followed by near and far averages.
    pub fn to_table(&self) -> String {
        let mut detectors: Vec<&str> = Vec::new();
        let mut sets: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !detectors.contains(&r.detector.as_str()) {
                detectors.push(&r.detector);
            }
            if !sets.contains(&r.dataset.as_str()) {
                sets.push(&r.dataset);
            }
        }
        let mut out = String::new();
        write!(out, "{:<11}", "detector").unwrap();
        for s in &sets {
            write!(out, " {:>15}", s).unwrap();
        }
        writeln!(out, " {:>15} {:>15}", "near-avg", "far-avg").unwrap();
        for d in detectors {
            write!(out, "{:<11}", d).unwrap();
            for s in &sets {
                match self.row(d, s) {
                    Some(r) => write!(out, " {:>7.2}/{:>7.2}", 100.0 * r.fpr95, 100.0 * r.auroc).unwrap(),
                    None => write!(out, " {:>15}", "-").unwrap(),
                }
            }
            for g in [OodGroup::Near, OodGroup::Far] {
                match self.average(d, g) {
                    Some(a) => write!(out, " {:>7.2}/{:>7.2}", 100.0 * a.fpr95, 100.0 * a.auroc).unwrap(),
                    None => write!(out, " {:>15}", "-").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }
}
