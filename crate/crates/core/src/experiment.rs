//! File layout, manifests and the staged desk run shared by the CLI and the
//! test suites.
//!
//! A data directory holds `train.oodd`, `ind_val.oodd`, `ind_test.oodd`,
//! `ood_val.oodd`, one `ood_<name>.oodd` per OOD set and `suite.json`
//! naming the sets and their groups.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    claim1_check, entropy_bound, landscape, score_distributions, shift_histogram, svg, Binning, Claim1Report,
    SampleSet,
};
use crate::datasets::{load_dataset, save_dataset, DeskData, DeskPreset, LabeledDataset, OodGroup, OodSet, OodSuite, Split};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_suite, sweep, Detector, DetectorParams, DetectorSpec, EvalReport, NetDetector, SweepGrid, SweepResult,
    DETECTOR_NAMES,
};
use crate::model::{load_weights, save_weights, train, Activation, Classifier, TrainConfig, TrainMode};
use crate::pro::{pro_trajectories, robustness_gap, NetScore, ProConfig};
use crate::scores::ScoreFn;
use crate::tensor::Tensor;

pub const TOOL: &str = "pro-ood";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Resolved configuration of one command, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    /// Output files relative to the output directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config: serde_json::to_value(config).expect("config serializes"),
            outputs: Vec::new(),
        }
    }
}

/// Collects files written under one directory.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn prepare(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        self.written.push(rel.to_string());
        Ok(p)
    }

    pub fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let p = self.prepare(rel)?;
        std::fs::write(&p, contents).map_err(|e| Error::io(&p, e))
    }

    pub fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("value serializes");
        text.push('\n');
        self.write(rel, text)
    }

    pub fn save_dataset(&mut self, rel: &str, ds: &LabeledDataset) -> Result<()> {
        let p = self.prepare(rel)?;
        save_dataset(ds, p)
    }

    pub fn save_weights(&mut self, rel: &str, net: &Classifier) -> Result<()> {
        let p = self.prepare(rel)?;
        save_weights(net, p)
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn finish(mut self, mut manifest: Manifest) -> Result<Vec<String>> {
        manifest.outputs = self.written.clone();
        self.write_json("manifest.json", &manifest)?;
        Ok(self.written)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SuiteEntry {
    name: String,
    group: OodGroup,
    file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SuiteFile {
    class_count: usize,
    dim: usize,
    ood: Vec<SuiteEntry>,
}

/// Writes every split of `data` under `prefix` (which may be empty).
pub fn write_data(out: &mut OutDir, prefix: &str, data: &DeskData) -> Result<()> {
    let rel = |f: &str| format!("{prefix}{f}");
    out.save_dataset(&rel("train.oodd"), &data.train)?;
    out.save_dataset(&rel("ind_val.oodd"), &data.ind_val)?;
    out.save_dataset(&rel("ind_test.oodd"), &data.suite.ind_test)?;
    out.save_dataset(&rel("ood_val.oodd"), &data.suite.ood_val)?;
    let mut entries = Vec::new();
    for set in &data.suite.ood {
        let file = format!("ood_{}.oodd", set.name);
        out.save_dataset(&rel(&file), &set.data)?;
        entries.push(SuiteEntry {
            name: set.name.clone(),
            group: set.group,
            file,
        });
    }
    out.write_json(
        &rel("suite.json"),
        &SuiteFile {
            class_count: data.train.class_count,
            dim: data.train.dim(),
            ood: entries,
        },
    )
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Validation {
        field: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Loads a data directory written by [`write_data`].
pub fn load_data(dir: impl AsRef<Path>) -> Result<DeskData> {
    let dir = dir.as_ref();
    let suite_path = dir.join("suite.json");
    let suite: SuiteFile = parse_json(&suite_path, &read_text(&suite_path)?)?;
    let train = load_dataset(dir.join("train.oodd"), Split::Train)?;
    let ind_val = load_dataset(dir.join("ind_val.oodd"), Split::Val)?;
    let ind_test = load_dataset(dir.join("ind_test.oodd"), Split::Test)?;
    let ood_val = load_dataset(dir.join("ood_val.oodd"), Split::Val)?;
    let ood = suite
        .ood
        .iter()
        .map(|e| {
            Ok(OodSet {
                name: e.name.clone(),
                group: e.group,
                data: load_dataset(dir.join(&e.file), Split::Test)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for ds in [&train, &ind_val, &ind_test] {
        if ds.dim() != suite.dim || ds.class_count != suite.class_count {
            return Err(Error::Schema(format!(
                "split shapes disagree with suite.json (D={}, C={})",
                suite.dim, suite.class_count
            )));
        }
    }
    Ok(DeskData {
        train,
        ind_val,
        suite: OodSuite::new(ind_test, ood, ood_val)?,
    })
}

pub fn load_net(path: impl AsRef<Path>) -> Result<Classifier> {
    load_weights(path)
}

/// Weights and data must agree on D and C.
pub fn check_compatible(net: &Classifier, data: &DeskData) -> Result<()> {
    if net.input_dim() != data.train.dim() || net.class_count() != data.train.class_count {
        return Err(Error::Schema(format!(
            "model is D={} C={}, data is D={} C={}",
            net.input_dim(),
            net.class_count(),
            data.train.dim(),
            data.train.class_count
        )));
    }
    Ok(())
}

/// Training setup of the desk benchmark: tanh MLP `[32, 32]` trained with
/// five-step PGD at `ε_adv = 0.1`.
pub fn desk_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 40,
        batch_size: 32,
        learning_rate: 0.05,
        seed,
        hidden: vec![32, 32],
        activation: Activation::Tanh,
        mode: TrainMode::Adversarial {
            eps: 0.1,
            pgd_steps: 5,
            pgd_step_size: 0.04,
        },
    }
}

/// One CSV line per epoch.
pub fn train_log_csv(losses: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}

/// Base scores the sweep tunes PRO around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub bases: Vec<ScoreFn>,
    pub grid: SweepGrid,
}

impl SweepPlan {
    /// PRO-MSP, PRO-MSP-T, PRO-ENT and PRO-GEN over the default grid, with
    /// temperatures `{1, 10, 100, 1000}` and `γ ∈ {0.01, 0.1}`.
    pub fn standard(params: &DetectorParams, class_count: usize) -> Self {
        Self {
            bases: vec![
                ScoreFn::Msp,
                ScoreFn::MspT { t: params.temp },
                ScoreFn::Ent,
                ScoreFn::Gen {
                    gamma: params.gamma,
                    m: params.m_top.min(class_count),
                },
            ],
            grid: SweepGrid {
                t: vec![1.0, 10.0, 100.0, 1000.0],
                gamma: vec![0.01, 0.1],
                ..SweepGrid::default()
            },
        }
    }
}

/// Runs the sweep once per base score.
pub fn run_sweeps(net: &Classifier, plan: &SweepPlan, data: &DeskData) -> Result<Vec<SweepResult>> {
    plan.bases
        .iter()
        .map(|&b| sweep(net, b, &plan.grid, &data.ind_val.x, &data.suite.ood_val.x))
        .collect()
}

/// Detector specs for `names`. PRO detectors take their configuration from
/// `tuned` when it holds one for the same base score name, otherwise from
/// `params`; `clamp` applies to every PRO detector.
pub fn resolve_detectors(
    names: &[String],
    params: &DetectorParams,
    tuned: &[DetectorSpec],
    clamp: Option<(f64, f64)>,
    class_count: usize,
) -> Result<Vec<DetectorSpec>> {
    names
        .iter()
        .map(|name| {
            let mut spec = tuned
                .iter()
                .find(|t| t.name() == *name)
                .copied()
                .map(Ok)
                .unwrap_or_else(|| DetectorSpec::from_name(name, params, class_count))?;
            if let (DetectorSpec::Pro { cfg, .. }, Some((lo, hi))) = (&mut spec, clamp) {
                *cfg = cfg.with_clamp(lo, hi);
            }
            spec.validate(class_count)?;
            Ok(spec)
        })
        .collect()
}

pub fn all_detector_names() -> Vec<String> {
    DETECTOR_NAMES.iter().map(|s| s.to_string()).collect()
}

pub fn evaluate(net: &Classifier, specs: &[DetectorSpec], suite: &OodSuite) -> Result<EvalReport> {
    let bound: Vec<NetDetector> = specs.iter().map(|s| s.bind(net)).collect();
    let refs: Vec<&dyn Detector> = bound.iter().map(|d| d as &dyn Detector).collect();
    evaluate_suite(&refs, suite)
}

/// Per-sample scores of every detector: `detector,set,index,score`.
pub fn scores_csv(report: &EvalReport) -> String {
    let mut out = String::from("detector,set,index,score\n");
    for s in &report.scores {
        let sets = std::iter::once(("ind_test", &s.ind)).chain(s.ood.iter().map(|(n, v)| (n.as_str(), v)));
        for (set, v) in sets {
            for (i, x) in v.iter().enumerate() {
                out.push_str(&format!("{},{set},{i},{x}\n", s.detector));
            }
        }
    }
    out
}

/// One-step Δz on IND test against each OOD test set and their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub set: String,
    pub eps: f64,
    pub mean_dz_ind: f64,
    pub mean_dz_ood: f64,
    pub gap: f64,
}

pub fn robustness_table(net: &Classifier, score: ScoreFn, suite: &OodSuite, eps: f64) -> Result<Vec<RobustnessRow>> {
    let field = NetScore::new(net, score)?;
    let mut rows = Vec::new();
    let mut pooled: Option<LabeledDataset> = None;
    for set in &suite.ood {
        let g = robustness_gap(&field, &suite.ind_test.x, &set.data.x, eps)?;
        rows.push(RobustnessRow {
            set: set.name.clone(),
            eps,
            mean_dz_ind: g.mean_dz_ind,
            mean_dz_ood: g.mean_dz_ood,
            gap: g.gap,
        });
        pooled = Some(match pooled {
            None => set.data.clone(),
            Some(p) => p.concat(&set.data)?,
        });
    }
    if let Some(p) = pooled {
        let g = robustness_gap(&field, &suite.ind_test.x, &p.x, eps)?;
        rows.push(RobustnessRow {
            set: "all_ood".into(),
            eps,
            mean_dz_ind: g.mean_dz_ind,
            mean_dz_ood: g.mean_dz_ood,
            gap: g.gap,
        });
    }
    Ok(rows)
}

pub fn robustness_csv(rows: &[RobustnessRow]) -> String {
    let mut out = String::from("set,eps,mean_dz_ind,mean_dz_ood,gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.set, r.eps, r.mean_dz_ind, r.mean_dz_ood, r.gap
        ));
    }
    out
}

/// Samples whose trajectory minimum is reached before the last step.
pub fn early_minimum_count(net: &Classifier, score: ScoreFn, x: &Tensor, cfg: &ProConfig) -> Result<usize> {
    let field = NetScore::new(net, score)?;
    Ok(pro_trajectories(&field, x, cfg)?
        .iter()
        .filter(|t| t.scores[..t.scores.len() - 1].iter().any(|&s| s < *t.scores.last().unwrap()))
        .count())
}

/// Everything the desk run needs besides the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub preset: DeskPreset,
    pub train: TrainConfig,
    pub params: DetectorParams,
    pub sweep: SweepPlan,
    /// Extra ε values for shift histograms; the tuned PRO-MSP ε is added.
    pub shift_eps: Vec<f64>,
    pub landscape_half_range: f64,
    pub landscape_grid_n: usize,
    pub claim1_eps: f64,
    pub claim1_steps: usize,
    pub svg: bool,
}

impl PipelineConfig {
    pub fn desk(seed: u64) -> Self {
        let preset = DeskPreset::default();
        let params = DetectorParams::default();
        Self {
            seed,
            preset,
            train: desk_train_config(seed),
            params,
            sweep: SweepPlan::standard(&params, preset.blobs.classes),
            shift_eps: vec![0.001, 0.01, 0.1],
            landscape_half_range: 0.5,
            landscape_grid_n: 21,
            claim1_eps: 0.1,
            claim1_steps: 5,
            svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub final_train_loss: f64,
    pub test_accuracy: f64,
    pub tuned: Vec<DetectorSpec>,
    /// ε of the tuned PRO-MSP configuration.
    pub tuned_msp_eps: f64,
    pub robustness: Vec<RobustnessRow>,
    pub claim1: Claim1Report,
    pub claim1_clean: Claim1Report,
    pub entropy_bound: Option<f64>,
    /// Test samples (IND and OOD) whose PRO-MSP minimum at ε = 0.01, K = 7
    /// comes before the final step.
    pub early_minimum_samples: usize,
}

/// Output of [`run_pipeline`].
pub struct PipelineRun {
    pub summary: PipelineSummary,
    pub report: EvalReport,
    pub net: Classifier,
    pub data: DeskData,
    pub files: Vec<String>,
}

fn eps_tag(eps: f64) -> String {
    format!("{eps:e}")
}

/// gen-data → train → sweep → eval → analysis, all under `out`.
pub fn run_pipeline(cfg: &PipelineConfig, out: impl AsRef<Path>) -> Result<PipelineRun> {
    let mut dir = OutDir::create(out)?;

    let data = cfg.preset.generate(cfg.seed)?;
    write_data(&mut dir, "data/", &data)?;

    let trained = train(&data.train, &cfg.train)?;
    let net = trained.net;
    dir.save_weights("model/weights.json", &net)?;
    dir.write("model/train_log.csv", train_log_csv(&trained.epoch_losses))?;
    let labels = data.suite.ind_test.class_indices()?;
    let test_accuracy = net.accuracy(&data.suite.ind_test.x, &labels)?;

    let sweeps = run_sweeps(&net, &cfg.sweep, &data)?;
    let tuned: Vec<DetectorSpec> = sweeps.iter().map(|s| s.best).collect();
    for s in &sweeps {
        dir.write(
            &format!("sweep/sweep_{}.csv", s.best.score_fn().name()),
            s.to_csv(),
        )?;
    }
    dir.write_json("sweep/best.json", &tuned)?;

    let c = net.class_count();
    let specs = resolve_detectors(&all_detector_names(), &cfg.params, &tuned, None, c)?;
    let report = evaluate(&net, &specs, &data.suite)?;
    dir.write("eval/report.csv", report.to_csv())?;
    dir.write("eval/report.txt", report.to_table())?;
    dir.write("eval/scores.csv", scores_csv(&report))?;

    let tuned_msp_eps = tuned
        .iter()
        .find(|t| t.name() == "PRO-MSP")
        .and_then(|t| t.hyper().eps)
        .unwrap_or(cfg.params.eps);
    let robustness = robustness_table(&net, ScoreFn::Msp, &data.suite, tuned_msp_eps)?;
    dir.write("analysis/robustness.csv", robustness_csv(&robustness))?;

    let msp = NetScore::new(&net, ScoreFn::Msp)?;
    let ood_sets: Vec<SampleSet> = data
        .suite
        .ood
        .iter()
        .map(|s| SampleSet {
            name: &s.name,
            x: &s.data.x,
        })
        .collect();
    let ind = SampleSet {
        name: "ind_test",
        x: &data.suite.ind_test.x,
    };
    let mut eps_list = vec![tuned_msp_eps];
    eps_list.extend(cfg.shift_eps.iter().copied().filter(|&e| e != tuned_msp_eps));
    for h in shift_histogram(&msp, ind, &ood_sets, &eps_list, Binning::Probability)? {
        let tag = eps_tag(h.eps);
        dir.write(&format!("analysis/shift_hist_eps{tag}.csv"), h.to_csv())?;
        dir.write(&format!("analysis/shift_raw_eps{tag}.csv"), h.raw_csv())?;
        if cfg.svg {
            dir.write(&format!("analysis/shift_hist_eps{tag}.svg"), svg::histogram_svg(&h))?;
        }
    }

    let mut probes = vec![("ind_test", &data.suite.ind_test.x)];
    probes.extend(data.suite.ood.iter().map(|s| (s.name.as_str(), &s.data.x)));
    for (name, x) in probes {
        let x0 = Tensor::vector(x.row(0).to_vec())?;
        let grid = landscape(&msp, &x0, cfg.landscape_half_range, cfg.landscape_grid_n, cfg.seed)?;
        dir.write(&format!("analysis/landscape_{name}.csv"), grid.to_csv())?;
        if cfg.svg {
            dir.write(&format!("analysis/landscape_{name}.svg"), svg::landscape_svg(&grid))?;
        }
    }

    let pairs: Vec<(DetectorSpec, DetectorSpec)> = tuned
        .iter()
        .map(|t| (DetectorSpec::Base { score: t.score_fn() }, *t))
        .collect();
    let mut sets = vec![ind];
    sets.extend(ood_sets.iter().copied());
    for p in score_distributions(&net, &pairs, &sets)? {
        dir.write(&format!("analysis/scores_{}.csv", p.base), p.to_csv())?;
    }

    let claim1 = claim1_check(&net, &data.suite.ind_test, cfg.claim1_eps, cfg.claim1_steps)?;
    let claim1_clean = claim1_check(&net, &data.suite.ind_test, 0.0, 0)?;
    let entropy = entropy_bound(claim1.e_hat, c).ok();
    dir.write_json("analysis/claim1.json", &(&claim1, &claim1_clean, entropy))?;

    let mut all_test = data.suite.ind_test.clone();
    for s in &data.suite.ood {
        all_test = all_test.concat(&s.data)?;
    }
    let early = early_minimum_count(&net, ScoreFn::Msp, &all_test.x, &ProConfig::new(0.01, 7))?;

    let summary = PipelineSummary {
        final_train_loss: trained.final_loss,
        test_accuracy,
        tuned,
        tuned_msp_eps,
        robustness,
        claim1,
        claim1_clean,
        entropy_bound: entropy,
        early_minimum_samples: early,
    };
    dir.write_json("summary.json", &summary)?;
    let files = dir.finish(Manifest::new("pipeline", cfg))?;
    Ok(PipelineRun {
        summary,
        report,
        net,
        data,
        files,
    })
}
