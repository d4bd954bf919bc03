//! Command-line interface. Every command writes its outputs plus a
//! `manifest.json` into `--out`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{claim1_check, entropy_bound, landscape, shift_histogram, svg, Binning, SampleSet};
use crate::datasets::{BlobSpec, DeskPreset};
use crate::error::{Error, Result};
use crate::eval::{DetectorParams, DetectorSpec, Preset, SweepGrid};
use crate::experiment::{
    all_detector_names, check_compatible, evaluate, load_data, load_net, resolve_detectors, run_pipeline,
    run_sweeps, scores_csv, train_log_csv, write_data, Manifest, OutDir, PipelineConfig, SweepPlan,
};
use crate::model::{train, Activation, TrainConfig, TrainMode};
use crate::pro::NetScore;
use crate::tensor::Tensor;

#[derive(Debug, Parser)]
#[command(name = "pro-ood", version, about = "Perturbation-rectified OOD detection at desk scale")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic IND/OOD benchmark.
    GenData(GenDataArgs),
    /// Train a classifier on a data directory.
    Train(TrainArgs),
    /// Tune PRO hyperparameters on the validation splits.
    Sweep(SweepArgs),
    /// Evaluate detectors on the test splits.
    Eval(EvalArgs),
    /// Score grid on a random 2-D slice around one sample.
    Landscape(LandscapeArgs),
    /// One-step score-shift histograms.
    Shift(ShiftArgs),
    /// Confidence lower bounds for an adversarially trained model.
    BoundCheck(BoundArgs),
    /// gen-data, train, sweep, eval and analysis in one run.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenDataArgs {
    /// Benchmark preset; only `desk` exists.
    #[arg(long, default_value = "desk")]
    pub preset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the number of IND classes.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Override the input dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Override the distance between nearest class means.
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "32,32")]
    pub hidden: Vec<usize>,
    /// `relu` or `tanh`.
    #[arg(long, default_value = "tanh")]
    pub activation: String,
    /// `standard` or `adversarial`.
    #[arg(long, default_value = "adversarial")]
    pub mode: String,
    #[arg(long, default_value_t = 0.1)]
    pub eps_adv: f64,
    #[arg(long, default_value_t = 5)]
    pub pgd_steps: usize,
    #[arg(long, default_value_t = 0.04)]
    pub pgd_step_size: f64,
}

/// Hyperparameters shared by detector-building commands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectorFlags {
    /// PRO step size ε.
    #[arg(long, default_value_t = 0.001)]
    pub eps: f64,
    /// PRO step count K.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Temperature for MSP-T.
    #[arg(long, default_value_t = 1000.0)]
    pub temp: f64,
    /// GEN γ.
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// GEN top-M, capped at the class count.
    #[arg(long, default_value_t = 10)]
    pub m_top: usize,
    #[arg(long, default_value_t = 0.0014)]
    pub odin_eps: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub odin_temp: f64,
}

impl DetectorFlags {
    fn params(&self) -> DetectorParams {
        DetectorParams {
            eps: self.eps,
            k: self.k,
            temp: self.temp,
            gamma: self.gamma,
            m_top: self.m_top,
            odin_eps: self.odin_eps,
            odin_temp: self.odin_temp,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Base scores to tune, from MSP, MSP-T, ENT, GEN, EBO.
    #[arg(long, value_delimiter = ',', default_value = "MSP,MSP-T,ENT,GEN")]
    pub bases: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Option<Vec<usize>>,
    #[command(flatten)]
    pub det: DetectorFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Detector names; all registered detectors by default.
    #[arg(long, value_delimiter = ',')]
    pub detectors: Option<Vec<String>>,
    /// `best.json` from `sweep`; overrides flags and preset for PRO detectors.
    #[arg(long)]
    pub tuned: Option<PathBuf>,
    /// Example PRO settings: cifar10-like, cifar100-like or imagenet-like.
    #[arg(long)]
    pub preset: Option<String>,
    /// Box constraint applied after every PRO step.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub clamp: Option<Vec<f64>>,
    #[command(flatten)]
    pub det: DetectorFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Base score name.
    #[arg(long, default_value = "MSP")]
    pub score: String,
    /// `ind_test` or an OOD set name.
    #[arg(long, default_value = "ind_test")]
    pub set: String,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, default_value_t = 0.5)]
    pub half_range: f64,
    /// Odd grid size.
    #[arg(long, default_value_t = 21)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub det: DetectorFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct ShiftArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "MSP")]
    pub score: String,
    /// Perturbation sizes, comma separated.
    #[arg(long = "shift-eps", value_delimiter = ',', default_value = "0.001,0.01,0.1")]
    pub shift_eps: Vec<f64>,
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub det: DetectorFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// L∞ radius of the perturbation ball.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 5)]
    pub pgd_steps: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        message: message.into(),
    }
}

fn base_score(name: &str, det: &DetectorFlags, class_count: usize) -> Result<crate::scores::ScoreFn> {
    match DetectorSpec::from_name(name, &det.params(), class_count)? {
        DetectorSpec::Base { score } => Ok(score),
        _ => Err(invalid("score", format!("`{name}` is not a base score; use MSP, MSP-T, ENT, GEN or EBO"))),
    }
}

fn cmd_gen_data(a: &GenDataArgs) -> Result<()> {
    if a.preset != "desk" {
        return Err(invalid("preset", format!("unknown data preset `{}`; valid: desk", a.preset)));
    }
    let mut preset = DeskPreset::default();
    preset.blobs = BlobSpec {
        classes: a.classes.unwrap_or(preset.blobs.classes),
        dim: a.dim.unwrap_or(preset.blobs.dim),
        margin: a.margin.unwrap_or(preset.blobs.margin),
    };
    let data = preset.generate(a.seed)?;
    let mut out = OutDir::create(&a.out)?;
    write_data(&mut out, "", &data)?;
    out.finish(Manifest::new("gen-data", &(a, preset)))?;
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let activation = match a.activation.as_str() {
        "relu" => Activation::Relu,
        "tanh" => Activation::Tanh,
        other => return Err(invalid("activation", format!("`{other}`; valid: relu, tanh"))),
    };
    let mode = match a.mode.as_str() {
        "standard" => TrainMode::Standard,
        "adversarial" => TrainMode::Adversarial {
            eps: a.eps_adv,
            pgd_steps: a.pgd_steps,
            pgd_step_size: a.pgd_step_size,
        },
        other => return Err(invalid("mode", format!("`{other}`; valid: standard, adversarial"))),
    };
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: a.seed,
        hidden: a.hidden.clone(),
        activation,
        mode,
    };
    let data = load_data(&a.data)?;
    let outcome = train(&data.train, &cfg)?;
    let mut out = OutDir::create(&a.out)?;
    out.save_weights("weights.json", &outcome.net)?;
    out.write("train_log.csv", train_log_csv(&outcome.epoch_losses))?;
    out.finish(Manifest::new("train", &cfg))?;
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let net = load_net(&a.weights)?;
    check_compatible(&net, &data)?;
    let c = net.class_count();
    let mut plan = SweepPlan::standard(&a.det.params(), c);
    plan.bases = a
        .bases
        .iter()
        .map(|b| base_score(b, &a.det, c))
        .collect::<Result<_>>()?;
    let d = SweepGrid::default();
    plan.grid = SweepGrid {
        eps: a.eps_grid.clone().unwrap_or(d.eps),
        k: a.k_grid.clone().unwrap_or(d.k),
        t: a.t_grid.clone().unwrap_or(plan.grid.t),
        gamma: a.gamma_grid.clone().unwrap_or(plan.grid.gamma),
        m: a.m_grid.clone().unwrap_or(plan.grid.m),
    };
    let results = run_sweeps(&net, &plan, &data)?;
    let mut out = OutDir::create(&a.out)?;
    for r in &results {
        out.write(&format!("sweep_{}.csv", r.best.score_fn().name()), r.to_csv())?;
    }
    let best: Vec<DetectorSpec> = results.iter().map(|r| r.best).collect();
    out.write_json("best.json", &best)?;
    out.finish(Manifest::new("sweep", &plan))?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let net = load_net(&a.weights)?;
    check_compatible(&net, &data)?;
    let c = net.class_count();
    let tuned: Vec<DetectorSpec> = match (&a.tuned, &a.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| invalid("tuned", e.to_string()))?
        }
        (None, Some(p)) => Preset::parse(p)?.pro_detectors(c),
        (None, None) => Vec::new(),
    };
    let clamp = match a.clamp.as_deref() {
        Some([lo, hi]) => Some((*lo, *hi)),
        Some(_) => return Err(invalid("clamp", "expects LO HI")),
        None => None,
    };
    let names = a.detectors.clone().unwrap_or_else(all_detector_names);
    let specs = resolve_detectors(&names, &a.det.params(), &tuned, clamp, c)?;
    let report = evaluate(&net, &specs, &data.suite)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("report.csv", report.to_csv())?;
    out.write("report.txt", report.to_table())?;
    out.write("scores.csv", scores_csv(&report))?;
    out.finish(Manifest::new("eval", &(a, specs)))?;
    Ok(())
}

fn cmd_landscape(a: &LandscapeArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let net = load_net(&a.weights)?;
    check_compatible(&net, &data)?;
    let score = base_score(&a.score, &a.det, net.class_count())?;
    let x = if a.set == "ind_test" {
        &data.suite.ind_test.x
    } else {
        &data
            .suite
            .ood
            .iter()
            .find(|s| s.name == a.set)
            .ok_or_else(|| invalid("set", format!("no set named `{}`", a.set)))?
            .data
            .x
    };
    if a.index >= x.rows() {
        return Err(invalid("index", format!("{} is out of range for {} rows", a.index, x.rows())));
    }
    let field = NetScore::new(&net, score)?;
    let grid = landscape(&field, &Tensor::vector(x.row(a.index).to_vec())?, a.half_range, a.grid_n, a.seed)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("landscape.csv", grid.to_csv())?;
    if a.svg {
        out.write("landscape.svg", svg::landscape_svg(&grid))?;
    }
    out.finish(Manifest::new("landscape", &(a, score)))?;
    Ok(())
}

fn cmd_shift(a: &ShiftArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let net = load_net(&a.weights)?;
    check_compatible(&net, &data)?;
    let score = base_score(&a.score, &a.det, net.class_count())?;
    let field = NetScore::new(&net, score)?;
    let ood: Vec<SampleSet> = data
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
    let binning = if score.is_probability() {
        Binning::Probability
    } else {
        Binning::DataDriven
    };
    let mut out = OutDir::create(&a.out)?;
    for h in shift_histogram(&field, ind, &ood, &a.shift_eps, binning)? {
        let tag = format!("{:e}", h.eps);
        out.write(&format!("shift_hist_eps{tag}.csv"), h.to_csv())?;
        out.write(&format!("shift_raw_eps{tag}.csv"), h.raw_csv())?;
        if a.svg {
            out.write(&format!("shift_hist_eps{tag}.svg"), svg::histogram_svg(&h))?;
        }
    }
    out.finish(Manifest::new("shift", &(a, score)))?;
    Ok(())
}

fn cmd_bound_check(a: &BoundArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let net = load_net(&a.weights)?;
    check_compatible(&net, &data)?;
    let report = claim1_check(&net, &data.suite.ind_test, a.eps, a.pgd_steps)?;
    let entropy = entropy_bound(report.e_hat, net.class_count()).ok();
    let mut out = OutDir::create(&a.out)?;
    out.write_json("bound.json", &(&report, entropy))?;
    out.finish(Manifest::new("bound-check", a))?;
    println!(
        "E_hat={:.6} mean_min_msp={:.6} bound={:.6} holds={}",
        report.e_hat, report.mean_min_msp, report.bound, report.holds
    );
    Ok(())
}

fn cmd_pipeline(a: &PipelineArgs) -> Result<()> {
    let mut cfg = PipelineConfig::desk(a.seed);
    cfg.svg = a.svg;
    let run = run_pipeline(&cfg, &a.out)?;
    print!("{}", run.report.to_table());
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenData(a) => cmd_gen_data(a),
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Landscape(a) => cmd_landscape(a),
        Command::Shift(a) => cmd_shift(a),
        Command::BoundCheck(a) => cmd_bound_check(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    }
}

/// Single-line error report: `error kind=<kind> exit=<code> message=<text>`.
pub fn error_line(kind: &str, code: i32, message: &str) -> String {
    let flat: Vec<&str> = message.split_whitespace().collect();
    format!("error kind={kind} exit={code} message={}", flat.join(" "))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            eprintln!("{}", error_line("validation", 2, first));
            return 2;
        }
    };
    crate::parallel::init_global_pool();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), e.exit_code(), &e.to_string()));
            e.exit_code()
        }
    }
}
