//! `jumpdiff`: batch driver for jump-diffusion simulation, calibration, and
//! pricing. Every subcommand writes its outputs plus a `run.json` manifest
//! into `--out DIR`; re-running the manifest's argv reproduces the outputs
//! byte for byte.
//!
//! Exit codes: 0 success, 2 usage error, 3 input-data error, 4 numeric
//! failure.

mod manifest;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use jumpdiff::data_io::{load_price_csv, slice_period, PriceSeries};
use jumpdiff::inference::{detect_jumps, gibbs_fit, posterior_summary, GibbsConfig};
use jumpdiff::models::{
    simulate, GbmParams, KouParams, MertonParams, Model, SimGrid, SplitJumpParams,
};
use jumpdiff::pricing::{
    mc_call_price, payoff_surface, price_annuity_guarantee, AnnuitySpec, CallSpec,
    GuaranteeEvaluation, SurfaceModelKind,
};
use manifest::RunManifest;
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "jumpdiff", version, about = "Jump-diffusion simulation, calibration, and pricing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate price paths and export them as CSV.
    Simulate(SimulateArgs),
    /// Calibrate jump-diffusion parameters from a daily price CSV.
    Fit(FitArgs),
    /// Detect jump days in a daily price CSV with the median-multiple rule.
    Detect(DetectArgs),
    /// Price a European call or an annuity guarantee by Monte Carlo.
    Price(PriceArgs),
    /// Sweep expected call payoff over a jump-arrival x jump-intensity grid.
    Surface(SurfaceArgs),
}

// ---------------------------------------------------------------------------
// error / exit-code plumbing

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<jumpdiff::Error> for CliError {
    fn from(e: jumpdiff::Error) -> Self {
        match e {
            jumpdiff::Error::InvalidInput(_) => CliError::Usage(e.to_string()),
            jumpdiff::Error::Data { .. } | jumpdiff::Error::Io(_) | jumpdiff::Error::Csv(_) => {
                CliError::Data(e.to_string())
            }
            jumpdiff::Error::Numeric(_) | jumpdiff::Error::Json(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Re-tags validation errors raised while processing loaded data: at that
/// point the flags were already accepted, so the problem is the input file.
fn data_stage<T>(r: jumpdiff::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        jumpdiff::Error::InvalidInput(m) => CliError::Data(m),
        other => other.into(),
    })
}

fn usage<T>(r: jumpdiff::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

// ---------------------------------------------------------------------------
// shared flag groups

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKindArg {
    Gbm,
    Merton,
    Kou,
    Split,
}

impl ModelKindArg {
    fn tag(self) -> &'static str {
        match self {
            ModelKindArg::Gbm => "gbm",
            ModelKindArg::Merton => "merton",
            ModelKindArg::Kou => "kou",
            ModelKindArg::Split => "split",
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Price dynamics to simulate under.
    #[arg(long, value_enum)]
    model: ModelKindArg,

    /// Annualized drift.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,

    /// Annualized diffusion volatility.
    #[arg(long)]
    sigma: f64,

    /// Jump arrival rate per year (merton, kou).
    #[arg(long)]
    lambda: Option<f64>,

    /// Mean log jump size (merton).
    #[arg(long, allow_hyphen_values = true)]
    mu_j: Option<f64>,

    /// Log jump size standard deviation (merton).
    #[arg(long)]
    sigma_j: Option<f64>,

    /// Upward jump probability (kou).
    #[arg(long)]
    p: Option<f64>,

    /// Upward jump rate, mean up-jump 1/eta1 (kou).
    #[arg(long)]
    eta1: Option<f64>,

    /// Downward jump rate, mean down-jump 1/eta2 (kou).
    #[arg(long)]
    eta2: Option<f64>,

    /// Upward jump arrival rate per year (split).
    #[arg(long)]
    lambda_up: Option<f64>,

    /// Upward jump rate, mean up-jump 1/eta-up (split).
    #[arg(long)]
    eta_up: Option<f64>,

    /// Downward jump arrival rate per year (split).
    #[arg(long)]
    lambda_down: Option<f64>,

    /// Downward jump rate, mean down-jump 1/eta-down (split).
    #[arg(long)]
    eta_down: Option<f64>,
}

impl ModelArgs {
    fn build(&self) -> Result<Model, CliError> {
        let allowed: &[&str] = match self.model {
            ModelKindArg::Gbm => &[],
            ModelKindArg::Merton => &["lambda", "mu-j", "sigma-j"],
            ModelKindArg::Kou => &["lambda", "p", "eta1", "eta2"],
            ModelKindArg::Split => &["lambda-up", "eta-up", "lambda-down", "eta-down"],
        };
        let provided = [
            ("lambda", self.lambda.is_some()),
            ("mu-j", self.mu_j.is_some()),
            ("sigma-j", self.sigma_j.is_some()),
            ("p", self.p.is_some()),
            ("eta1", self.eta1.is_some()),
            ("eta2", self.eta2.is_some()),
            ("lambda-up", self.lambda_up.is_some()),
            ("eta-up", self.eta_up.is_some()),
            ("lambda-down", self.lambda_down.is_some()),
            ("eta-down", self.eta_down.is_some()),
        ];
        for (name, given) in provided {
            if given && !allowed.contains(&name) {
                return Err(CliError::Usage(format!(
                    "--{name} conflicts with --model {}",
                    self.model.tag()
                )));
            }
        }

        let need = |opt: Option<f64>, name: &str| -> Result<f64, CliError> {
            opt.ok_or_else(|| {
                CliError::Usage(format!("--model {} requires --{name}", self.model.tag()))
            })
        };

        let gbm = usage(GbmParams::new(self.mu, self.sigma))?;
        let model = match self.model {
            ModelKindArg::Gbm => Model::Gbm(gbm),
            ModelKindArg::Merton => Model::Merton(usage(MertonParams::new(
                gbm,
                need(self.lambda, "lambda")?,
                need(self.mu_j, "mu-j")?,
                need(self.sigma_j, "sigma-j")?,
            ))?),
            ModelKindArg::Kou => Model::Kou(usage(KouParams::new(
                gbm,
                need(self.lambda, "lambda")?,
                need(self.p, "p")?,
                need(self.eta1, "eta1")?,
                need(self.eta2, "eta2")?,
            ))?),
            ModelKindArg::Split => Model::Split(usage(SplitJumpParams::new(
                gbm,
                need(self.lambda_up, "lambda-up")?,
                need(self.eta_up, "eta-up")?,
                need(self.lambda_down, "lambda-down")?,
                need(self.eta_down, "eta-down")?,
            ))?),
        };
        Ok(model)
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Daily price CSV to read.
    #[arg(long)]
    input: PathBuf,

    /// Column holding the observation date.
    #[arg(long, default_value = "Date")]
    date_column: String,

    /// Column holding the closing price.
    #[arg(long, default_value = "Close")]
    price_column: String,

    /// First date to keep (inclusive); requires --end.
    #[arg(long, requires = "end")]
    start: Option<NaiveDate>,

    /// Last date to keep (inclusive); requires --start.
    #[arg(long, requires = "start")]
    end: Option<NaiveDate>,
}

impl InputArgs {
    fn load(&self) -> Result<PriceSeries, CliError> {
        let series = load_price_csv(&self.input, &self.date_column, &self.price_column)?;
        match (self.start, self.end) {
            (Some(start), Some(end)) => Ok(data_stage(slice_period(&series, start, end))?.series),
            _ => Ok(series),
        }
    }

    fn params_json(&self) -> serde_json::Value {
        json!({
            "input": self.input.display().to_string(),
            "date_column": self.date_column,
            "price_column": self.price_column,
            "start": self.start,
            "end": self.end,
        })
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn write_csv_file<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> jumpdiff::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn write_json_file(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value).map_err(jumpdiff::Error::from)?;
    fs::write(path, body)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Initial price.
    #[arg(long, default_value_t = 100.0)]
    s0: f64,

    /// Horizon in years.
    #[arg(long)]
    t: f64,

    /// Number of time steps.
    #[arg(long)]
    steps: usize,

    /// Number of paths.
    #[arg(long)]
    paths: usize,

    /// RNG seed; auto-generated and recorded in the manifest when omitted.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker-count hint; results are independent of it.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let model = args.model.build()?;
    let seed = resolve_seed(args.seed);
    let grid = usage(SimGrid::new(args.s0, args.t, args.steps, args.paths, seed))?;
    let set = simulate(&model, &grid, args.workers)?;

    ensure_out_dir(&args.out)?;
    write_csv_file(&args.out.join("paths.csv"), |w| set.write_csv(w))?;

    let mut manifest = RunManifest::new(
        "simulate",
        Some(seed),
        json!({ "model": model, "grid": grid, "workers": args.workers }),
    );
    manifest.outputs.push("paths.csv".to_string());
    manifest.write(&args.out)?;

    println!(
        "wrote {} ({} paths x {} steps, model {})",
        args.out.join("paths.csv").display(),
        grid.n_paths,
        grid.n_steps,
        model.tag()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Gibbs sweeps to run.
    #[arg(long, default_value_t = 20_000)]
    iterations: usize,

    /// Initial sweeps to discard (must be < iterations).
    #[arg(long, default_value_t = 5_000)]
    burn_in: usize,

    /// Keep every k-th post-burn-in sweep.
    #[arg(long, default_value_t = 5)]
    thinning: usize,

    /// RNG seed; auto-generated and recorded in the manifest when omitted.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed);
    let config = GibbsConfig {
        iterations: args.iterations,
        burn_in: args.burn_in,
        thinning: args.thinning,
        seed,
        ..GibbsConfig::default()
    };
    usage(config.validate())?;

    let series = args.input.load()?;
    let chain = data_stage(gibbs_fit(&series, &config))?;
    let summary = posterior_summary(&chain)?;

    let summary_json = json!({
        "parameters": summary,
        "diagnostics": {
            "sigma_floor_hit": chain.sigma_floor_hit,
            "draws": chain.draws.len(),
            "accept_count": chain.accept_count,
        },
    });

    ensure_out_dir(&args.out)?;
    write_csv_file(&args.out.join("chain.csv"), |w| chain.write_csv(w))?;
    write_json_file(&args.out.join("summary.json"), &summary_json)?;

    let mut manifest = RunManifest::new(
        "fit",
        Some(seed),
        json!({
            "data": args.input.params_json(),
            "iterations": config.iterations,
            "burn_in": config.burn_in,
            "thinning": config.thinning,
            "priors": config.priors,
        }),
    );
    manifest.record_input(&args.input.input)?;
    manifest.outputs.push("chain.csv".to_string());
    manifest.outputs.push("summary.json".to_string());
    manifest.write(&args.out)?;

    println!("{}", serde_json::to_string_pretty(&summary_json).map_err(jumpdiff::Error::from)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// detect

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Spike threshold as a multiple of the same-sign median difference.
    #[arg(long, default_value_t = 4.0)]
    threshold_multiple: f64,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_detect(args: &DetectArgs) -> Result<(), CliError> {
    if !(args.threshold_multiple > 0.0 && args.threshold_multiple.is_finite()) {
        return Err(CliError::Usage("--threshold-multiple must be > 0".into()));
    }
    let series = args.input.load()?;
    let detection = data_stage(detect_jumps(&series, args.threshold_multiple))?;
    let detection_json = serde_json::to_value(&detection).map_err(jumpdiff::Error::from)?;

    ensure_out_dir(&args.out)?;
    write_json_file(&args.out.join("detection.json"), &detection_json)?;

    let mut manifest = RunManifest::new(
        "detect",
        None,
        json!({
            "data": args.input.params_json(),
            "threshold_multiple": args.threshold_multiple,
        }),
    );
    manifest.record_input(&args.input.input)?;
    manifest.outputs.push("detection.json".to_string());
    manifest.write(&args.out)?;

    println!("{}", serde_json::to_string_pretty(&detection_json).map_err(jumpdiff::Error::from)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// price

#[derive(Debug, Args)]
struct PriceArgs {
    #[command(subcommand)]
    product: PriceProduct,
}

#[derive(Debug, Subcommand)]
enum PriceProduct {
    /// European call option.
    Call(CallArgs),
    /// Variable-annuity roll-up guarantee.
    Annuity(AnnuityArgs),
}

#[derive(Debug, Args)]
struct CallArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Initial price.
    #[arg(long, default_value_t = 100.0)]
    s0: f64,

    /// Strike.
    #[arg(long)]
    k: f64,

    /// Maturity in years.
    #[arg(long, default_value_t = 1.0)]
    t: f64,

    /// Continuously compounded discount rate.
    #[arg(long, default_value_t = 0.0)]
    r: f64,

    /// Replace the drift so that E[S_T] = s0 e^{rT}.
    #[arg(long)]
    risk_neutral: bool,

    /// Time steps per path.
    #[arg(long, default_value_t = 1)]
    steps: usize,

    /// Number of Monte Carlo paths.
    #[arg(long, default_value_t = 10_000)]
    paths: usize,

    /// RNG seed; auto-generated and recorded in the manifest when omitted.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker-count hint; results are independent of it.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_price_call(args: &CallArgs) -> Result<(), CliError> {
    let mut model = args.model.build()?;
    if args.risk_neutral {
        model = model.with_risk_neutral_drift(args.r);
    }
    let spec = usage(CallSpec::new(args.s0, args.k, args.t, args.r))?;
    let seed = resolve_seed(args.seed);
    let grid = usage(SimGrid::new(args.s0, args.t, args.steps, args.paths, seed))?;
    let estimate = mc_call_price(&spec, &model, &grid, args.workers)?;

    let estimate_json = json!({
        "product": "call",
        "mean": estimate.mean,
        "std_error": estimate.std_error,
        "n_paths": estimate.n_paths,
        "seed": estimate.seed,
        "model": model,
        "spec": spec,
    });

    ensure_out_dir(&args.out)?;
    write_json_file(&args.out.join("estimate.json"), &estimate_json)?;

    let mut manifest = RunManifest::new(
        "price call",
        Some(seed),
        json!({
            "model": model,
            "spec": spec,
            "grid": grid,
            "risk_neutral": args.risk_neutral,
            "workers": args.workers,
        }),
    );
    manifest.outputs.push("estimate.json".to_string());
    manifest.write(&args.out)?;

    println!("{}", serde_json::to_string_pretty(&estimate_json).map_err(jumpdiff::Error::from)?);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvaluationArg {
    /// Payoff at maturity only (accumulation benefit).
    AtMaturity,
    /// Running maximum of the payoff over grid dates (death-benefit style).
    MaxOverDates,
}

impl From<EvaluationArg> for GuaranteeEvaluation {
    fn from(e: EvaluationArg) -> Self {
        match e {
            EvaluationArg::AtMaturity => GuaranteeEvaluation::AtMaturity,
            EvaluationArg::MaxOverDates => GuaranteeEvaluation::MaxOverDates,
        }
    }
}

#[derive(Debug, Args)]
struct AnnuityArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Initial subaccount value.
    #[arg(long, default_value_t = 100.0)]
    a0: f64,

    /// Continuous M&E fee rate.
    #[arg(long, default_value_t = 0.0)]
    c: f64,

    /// Continuous contribution rate.
    #[arg(long, default_value_t = 0.0)]
    k: f64,

    /// Guarantee roll-up rate.
    #[arg(long, default_value_t = 0.0)]
    g: f64,

    /// Maturity in years.
    #[arg(long, default_value_t = 10.0)]
    t: f64,

    /// When the guarantee payoff is evaluated.
    #[arg(long, value_enum, default_value_t = EvaluationArg::AtMaturity)]
    evaluation: EvaluationArg,

    /// Time steps per path.
    #[arg(long, default_value_t = 120)]
    steps: usize,

    /// Number of Monte Carlo paths.
    #[arg(long, default_value_t = 10_000)]
    paths: usize,

    /// RNG seed; auto-generated and recorded in the manifest when omitted.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker-count hint; results are independent of it.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_price_annuity(args: &AnnuityArgs) -> Result<(), CliError> {
    let model = args.model.build()?;
    let spec = usage(AnnuitySpec::new(args.a0, args.c, args.k, args.g, args.t))?;
    let seed = resolve_seed(args.seed);
    let grid = usage(SimGrid::new(args.a0, args.t, args.steps, args.paths, seed))?;
    let evaluation: GuaranteeEvaluation = args.evaluation.into();
    let estimate = price_annuity_guarantee(&spec, &model, &grid, evaluation, args.workers)?;

    let estimate_json = json!({
        "product": "annuity",
        "mean": estimate.mean,
        "std_error": estimate.std_error,
        "n_paths": estimate.n_paths,
        "seed": estimate.seed,
        "model": model,
        "spec": spec,
        "evaluation": evaluation,
    });

    ensure_out_dir(&args.out)?;
    write_json_file(&args.out.join("estimate.json"), &estimate_json)?;

    let mut manifest = RunManifest::new(
        "price annuity",
        Some(seed),
        json!({
            "model": model,
            "spec": spec,
            "grid": grid,
            "evaluation": evaluation,
            "workers": args.workers,
        }),
    );
    manifest.outputs.push("estimate.json".to_string());
    manifest.write(&args.out)?;

    println!("{}", serde_json::to_string_pretty(&estimate_json).map_err(jumpdiff::Error::from)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// surface

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SurfacePreset {
    /// 17x17 grid over (0,4] x (0,0.8], s0 = K = 100, mu 0.08, sigma 0.4.
    Fig5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SurfaceKindArg {
    /// Deterministic log jump of size `intensity` (sigma_j = 0).
    Merton,
    /// Upward-only exponential jumps with mean size `intensity`.
    SplitUp,
}

impl From<SurfaceKindArg> for SurfaceModelKind {
    fn from(k: SurfaceKindArg) -> Self {
        match k {
            SurfaceKindArg::Merton => SurfaceModelKind::Merton,
            SurfaceKindArg::SplitUp => SurfaceModelKind::SplitUp,
        }
    }
}

#[derive(Debug, Args)]
struct SurfaceArgs {
    /// Named parameter bundle; explicit flags are not needed with a preset.
    #[arg(long, value_enum, conflicts_with_all = ["lambda_axis", "intensity_axis"])]
    preset: Option<SurfacePreset>,

    /// Jump-arrival axis as start:stop:count (count >= 1, inclusive ends).
    #[arg(long, requires = "intensity_axis")]
    lambda_axis: Option<String>,

    /// Jump-intensity axis as start:stop:count (count >= 1, inclusive ends).
    #[arg(long, requires = "lambda_axis")]
    intensity_axis: Option<String>,

    /// Which jump law the grid sweeps.
    #[arg(long, value_enum, default_value_t = SurfaceKindArg::Merton)]
    model_kind: SurfaceKindArg,

    /// Initial price.
    #[arg(long, default_value_t = 100.0)]
    s0: f64,

    /// Strike.
    #[arg(long, default_value_t = 100.0)]
    k: f64,

    /// Maturity in years.
    #[arg(long, default_value_t = 1.0)]
    t: f64,

    /// Continuously compounded discount rate.
    #[arg(long, default_value_t = 0.0)]
    r: f64,

    /// Annualized drift of the diffusion part.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,

    /// Annualized diffusion volatility.
    #[arg(long)]
    sigma: Option<f64>,

    /// Time steps per path.
    #[arg(long, default_value_t = 1)]
    steps: usize,

    /// Number of Monte Carlo paths per cell.
    #[arg(long, default_value_t = 10_000)]
    paths: usize,

    /// RNG seed; auto-generated and recorded in the manifest when omitted.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker-count hint; results are independent of it.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Parses `start:stop:count` into an inclusive linear grid. A single-point
/// axis (`count` = 1) takes the value `start`.
fn parse_axis(spec: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--{flag}: expected start:stop:count, got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !stop.is_finite() || start < 0.0 || stop < start {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    if stop == start {
        return Err(CliError::Usage(format!(
            "--{flag}: start must differ from stop when count > 1"
        )));
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                stop
            } else {
                start + i as f64 * step
            }
        })
        .collect())
}

/// `count` points over the half-open range (0, hi].
fn open_axis(hi: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| hi * i as f64 / count as f64).collect()
}

fn cmd_surface(args: &SurfaceArgs) -> Result<(), CliError> {
    let (lambda_axis, intensity_axis, mu, sigma) = match args.preset {
        Some(SurfacePreset::Fig5) => (
            open_axis(4.0, 17),
            open_axis(0.8, 17),
            args.mu.unwrap_or(0.08),
            args.sigma.unwrap_or(0.4),
        ),
        None => {
            let lam = args
                .lambda_axis
                .as_deref()
                .ok_or_else(|| CliError::Usage("--lambda-axis or --preset is required".into()))?;
            let inten = args.intensity_axis.as_deref().ok_or_else(|| {
                CliError::Usage("--intensity-axis or --preset is required".into())
            })?;
            let mu = args
                .mu
                .ok_or_else(|| CliError::Usage("--mu is required without a preset".into()))?;
            let sigma = args
                .sigma
                .ok_or_else(|| CliError::Usage("--sigma is required without a preset".into()))?;
            (
                parse_axis(lam, "lambda-axis")?,
                parse_axis(inten, "intensity-axis")?,
                mu,
                sigma,
            )
        }
    };

    let base = usage(GbmParams::new(mu, sigma))?;
    let spec = usage(CallSpec::new(args.s0, args.k, args.t, args.r))?;
    let seed = resolve_seed(args.seed);
    let grid = usage(SimGrid::new(args.s0, args.t, args.steps, args.paths, seed))?;
    let kind: SurfaceModelKind = args.model_kind.into();
    let surface = usage_axes(payoff_surface(
        &spec,
        &base,
        &lambda_axis,
        &intensity_axis,
        &grid,
        kind,
        args.workers,
    ))?;

    ensure_out_dir(&args.out)?;
    write_csv_file(&args.out.join("surface.csv"), |w| surface.write_csv(w))?;
    let sidecar = json!({
        "lambda_axis": surface.lambda_axis,
        "intensity_axis": surface.intensity_axis,
        "baseline": surface.baseline,
        "seed": surface.seed,
        "model_kind": kind,
        "spec": spec,
        "base": base,
    });
    write_json_file(&args.out.join("surface.json"), &sidecar)?;

    let mut manifest = RunManifest::new(
        "surface",
        Some(seed),
        json!({
            "spec": spec,
            "base": base,
            "lambda_axis": lambda_axis,
            "intensity_axis": intensity_axis,
            "grid": grid,
            "model_kind": kind,
            "workers": args.workers,
        }),
    );
    manifest.outputs.push("surface.csv".to_string());
    manifest.outputs.push("surface.json".to_string());
    manifest.write(&args.out)?;

    println!(
        "wrote {} ({} x {} cells, baseline {})",
        args.out.join("surface.csv").display(),
        lambda_axis.len(),
        intensity_axis.len(),
        surface.baseline.mean
    );
    Ok(())
}

/// Axis-shape problems surface as usage errors (exit 2), matching the flag
/// they came from; anything else keeps its own classification.
fn usage_axes<T>(r: jumpdiff::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        jumpdiff::Error::InvalidInput(m) => CliError::Usage(m),
        other => other.into(),
    })
}

// ---------------------------------------------------------------------------

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Price(args) => match &args.product {
            PriceProduct::Call(call) => cmd_price_call(call),
            PriceProduct::Annuity(annuity) => cmd_price_annuity(annuity),
        },
        Command::Surface(args) => cmd_surface(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
