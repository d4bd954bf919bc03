//! Detector registry: base scores, the ODIN-direction baseline, and PRO
//! variants, all bound to a classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::pro::{odin_scores, pro_scores, NetScore, ProConfig};
use crate::scores::ScoreFn;
use crate::tensor::Tensor;

/// Names accepted by [`DetectorSpec::from_name`], in report order.
pub const DETECTOR_NAMES: [&str; 10] = [
    "MSP", "MSP-T", "ENT", "GEN", "EBO", "ODIN", "PRO-MSP", "PRO-MSP-T", "PRO-ENT", "PRO-GEN",
];

/// Hyperparameters attached to a report row; `None` where not applicable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub eps: Option<f64>,
    pub k: Option<usize>,
    pub t: Option<f64>,
    pub gamma: Option<f64>,
    pub m: Option<usize>,
}

/// Anything that maps a batch of inputs to one score per row.
pub trait Detector: Sync {
    fn name(&self) -> String;
    fn scores(&self, x: &Tensor) -> Result<Vec<f64>>;
    fn hyper(&self) -> HyperParams {
        HyperParams::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "detector", rename_all = "lowercase")]
pub enum DetectorSpec {
    Base { score: ScoreFn },
    Odin { score: ScoreFn, eps: f64 },
    Pro { score: ScoreFn, cfg: ProConfig },
}

/// Flag values used to instantiate detectors by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub eps: f64,
    pub k: usize,
    pub temp: f64,
    pub gamma: f64,
    pub m_top: usize,
    pub odin_eps: f64,
    pub odin_temp: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            eps: 0.001,
            k: 3,
            temp: 1000.0,
            gamma: 0.1,
            m_top: 10,
            odin_eps: 0.0014,
            odin_temp: 1000.0,
        }
    }
}

fn score_hyper(score: &ScoreFn) -> HyperParams {
    let mut h = HyperParams {
        t: score.temperature(),
        ..HyperParams::default()
    };
    if let ScoreFn::Gen { gamma, m } = *score {
        h.gamma = Some(gamma);
        h.m = Some(m);
    }
    h
}

impl DetectorSpec {
    /// Builds a registered detector. `class_count` caps GEN's top-M.
    pub fn from_name(name: &str, p: &DetectorParams, class_count: usize) -> Result<Self> {
        let m = p.m_top.min(class_count);
        let pro = |score| DetectorSpec::Pro {
            score,
            cfg: ProConfig::new(p.eps, p.k),
        };
        let spec = match name {
            "MSP" => DetectorSpec::Base { score: ScoreFn::Msp },
            "MSP-T" => DetectorSpec::Base {
                score: ScoreFn::MspT { t: p.temp },
            },
            "ENT" => DetectorSpec::Base { score: ScoreFn::Ent },
            "GEN" => DetectorSpec::Base {
                score: ScoreFn::Gen { gamma: p.gamma, m },
            },
            "EBO" => DetectorSpec::Base {
                score: ScoreFn::Ebo { t: 1.0 },
            },
            "ODIN" => DetectorSpec::Odin {
                score: ScoreFn::MspT { t: p.odin_temp },
                eps: p.odin_eps,
            },
            "PRO-MSP" => pro(ScoreFn::Msp),
            "PRO-MSP-T" => pro(ScoreFn::MspT { t: p.temp }),
            "PRO-ENT" => pro(ScoreFn::Ent),
            "PRO-GEN" => pro(ScoreFn::Gen { gamma: p.gamma, m }),
            other => {
                return Err(Error::Validation {
                    field: "detector".into(),
                    message: format!(
                        "unknown detector `{other}`; valid names: {}",
                        DETECTOR_NAMES.join(", ")
                    ),
                })
            }
        };
        spec.validate(class_count)?;
        Ok(spec)
    }

    pub fn name(&self) -> String {
        match self {
            DetectorSpec::Base { score } => score.name().to_string(),
            DetectorSpec::Odin { .. } => "ODIN".to_string(),
            DetectorSpec::Pro { score, .. } => format!("PRO-{}", score.name()),
        }
    }

    pub fn score_fn(&self) -> ScoreFn {
        match *self {
            DetectorSpec::Base { score } | DetectorSpec::Odin { score, .. } | DetectorSpec::Pro { score, .. } => score,
        }
    }

    pub fn validate(&self, class_count: usize) -> Result<()> {
        self.score_fn().validate(class_count)?;
        match self {
            DetectorSpec::Pro { cfg, .. } => cfg.validate(),
            DetectorSpec::Odin { eps, .. } if !(*eps >= 0.0 && eps.is_finite()) => {
                Err(Error::param(format!("ODIN eps must be ≥ 0, got {eps}")))
            }
            _ => Ok(()),
        }
    }

    pub fn hyper(&self) -> HyperParams {
        let mut h = score_hyper(&self.score_fn());
        match self {
            DetectorSpec::Base { .. } => {}
            DetectorSpec::Odin { eps, .. } => h.eps = Some(*eps),
            DetectorSpec::Pro { cfg, .. } => {
                h.eps = Some(cfg.eps);
                h.k = Some(cfg.k);
            }
        }
        h
    }

    /// Scores every row of `x` with this detector on `net`.
    pub fn scores(&self, net: &Classifier, x: &Tensor) -> Result<Vec<f64>> {
        let field = NetScore::new(net, self.score_fn())?;
        match self {
            DetectorSpec::Base { .. } => {
                crate::parallel::map_row_chunks(x, |c| crate::pro::ScoreField::score(&field, c))
            }
            DetectorSpec::Odin { eps, .. } => odin_scores(&field, x, *eps),
            DetectorSpec::Pro { cfg, .. } => pro_scores(&field, x, cfg),
        }
    }

    pub fn bind<'a>(&self, net: &'a Classifier) -> NetDetector<'a> {
        NetDetector { net, spec: *self }
    }
}

/// A [`DetectorSpec`] bound to a classifier.
#[derive(Debug, Clone, Copy)]
pub struct NetDetector<'a> {
    pub net: &'a Classifier,
    pub spec: DetectorSpec,
}

impl Detector for NetDetector<'_> {
    fn name(&self) -> String {
        self.spec.name()
    }

    fn scores(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.spec.scores(self.net, x)
    }

    fn hyper(&self) -> HyperParams {
        self.spec.hyper()
    }
}

/// Benchmark-style presets of example PRO hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Cifar10Like,
    Cifar100Like,
    ImagenetLike,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cifar10-like" => Ok(Preset::Cifar10Like),
            "cifar100-like" => Ok(Preset::Cifar100Like),
            "imagenet-like" => Ok(Preset::ImagenetLike),
            other => Err(Error::Validation {
                field: "preset".into(),
                message: format!(
                    "unknown preset `{other}`; valid: cifar10-like, cifar100-like, imagenet-like"
                ),
            }),
        }
    }

    /// PRO-MSP, PRO-MSP-T, PRO-ENT, PRO-GEN with the preset's settings.
    /// GEN's `M` is capped at `class_count`.
    pub fn pro_detectors(&self, class_count: usize) -> Vec<DetectorSpec> {
        // (ε, K) for MSP; (ε, K, T) for MSP-T; (ε, K) for ENT; (γ, M, ε, K) for GEN.
        let (msp, msp_t, ent, gen) = match self {
            Preset::Cifar10Like => ((3e-4, 3), (1e-3, 5, 1000.0), (1e-3, 1), (0.1, 10, 1e-3, 5)),
            Preset::Cifar100Like => ((1e-3, 5), (1e-3, 5, 10.0), (5e-4, 7), (0.01, 100, 8e-4, 5)),
            Preset::ImagenetLike => ((5e-4, 3), (1e-5, 1, 10.0), (5e-5, 7), (0.1, 100, 3e-4, 1)),
        };
        vec![
            DetectorSpec::Pro {
                score: ScoreFn::Msp,
                cfg: ProConfig::new(msp.0, msp.1),
            },
            DetectorSpec::Pro {
                score: ScoreFn::MspT { t: msp_t.2 },
                cfg: ProConfig::new(msp_t.0, msp_t.1),
            },
            DetectorSpec::Pro {
                score: ScoreFn::Ent,
                cfg: ProConfig::new(ent.0, ent.1),
            },
            DetectorSpec::Pro {
                score: ScoreFn::Gen {
                    gamma: gen.0,
                    m: gen.1.min(class_count),
                },
                cfg: ProConfig::new(gen.2, gen.3),
            },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_name_builds() {
        let p = DetectorParams::default();
        for name in DETECTOR_NAMES {
            let d = DetectorSpec::from_name(name, &p, 4).unwrap();
            assert_eq!(d.name(), name);
        }
    }

    #[test]
    fn unknown_name_lists_valid_names() {
        let err = DetectorSpec::from_name("KNN", &DetectorParams::default(), 4).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("KNN") && msg.contains("PRO-GEN") && msg.contains("ODIN"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn preset_values_match_table() {
        let d = Preset::Cifar10Like.pro_detectors(10);
        assert_eq!(d[0].hyper().eps, Some(3e-4));
        assert_eq!(d[0].hyper().k, Some(3));
        assert_eq!(d[1].hyper().t, Some(1000.0));
        let gen = Preset::Cifar100Like.pro_detectors(100)[3].hyper();
        assert_eq!((gen.gamma, gen.m, gen.eps, gen.k), (Some(0.01), Some(100), Some(8e-4), Some(5)));
        let imagenet = Preset::ImagenetLike.pro_detectors(4);
        assert_eq!(imagenet[3].hyper().m, Some(4));
        assert_eq!(imagenet[1].hyper().eps, Some(1e-5));
    }

    #[test]
    fn spec_serializes_round_trip() {
        let d = Preset::Cifar10Like.pro_detectors(10)[3];
        let s = serde_json::to_string(&d).unwrap();
        let back: DetectorSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
