//! `mipt`: run hybrid-circuit ensembles from manifests and analyse the
//! resulting entropy series.
//!
//! Exit status: 0 on success, 1 when the physics checks fail (broken series
//! invariants, failed fits, a critical point outside the scanned grid), 2 on
//! usage, parse or validation errors.

mod manifest;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mipt_core::fit::{default_window, fit_log_growth, fit_log_quadratic, fit_power_decay};
use mipt_core::io::{read_metadata, read_series_csv, write_curve_csv};
use mipt_core::scaling::{relaxation_collapse, short_time_offcritical_collapse};
use mipt_core::{Error, InitialState, ScalingParams};
use serde::Serialize;
use serde_json::json;

use manifest::{Analysis, Conventions, Experiment, Grid, Horizon};
use run::{run_experiment, sha256_hex, Context};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Physics(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Physics(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Physics(m) => write!(f, "physics check failed: {m}"),
        }
    }
}

/// Maps library errors onto exit classes.
pub fn core_error(e: Error) -> CliError {
    match e {
        Error::BrokenInvariant(_) | Error::Fit(_) | Error::NoOverlap | Error::Trajectory { .. } => {
            CliError::Physics(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "mipt",
    version,
    about = "Hybrid random-Clifford circuit ensembles and scaling analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a TOML manifest.
    Run(RunArgs),
    /// Run ensembles over a grid of sizes and measurement rates.
    Sweep(SweepArgs),
    /// Rescale series files and score their collapse.
    Collapse(CollapseArgs),
    /// Fit one series file.
    Fit(FitArgs),
    /// Locate the critical point from the curvature of short-time growth.
    ScanCritical(ScanArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed; overrides the manifest.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    manifest: PathBuf,
    /// Validate the manifest and print the plan without running.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
enum Init {
    Product,
    Volume,
}

impl From<Init> for InitialState {
    fn from(i: Init) -> Self {
        match i {
            Init::Product => InitialState::Product,
            Init::Volume => InitialState::VolumeLaw,
        }
    }
}

#[derive(Args, Serialize)]
struct SweepArgs {
    /// Ring sizes, e.g. `64,128,256`.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Measurement probabilities.
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "w",
        required_unless_present = "w"
    )]
    p: Vec<f64>,
    /// Fixed `w = (p − p_c)·L^{1/ν}` values instead of `p`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    w: Vec<f64>,
    #[arg(long, value_enum)]
    init: Init,
    /// Recorded time units after t = 0.
    #[arg(long)]
    t_max: usize,
    /// Trajectories per ensemble.
    #[arg(long)]
    n: usize,
    /// Preparation units for the volume-law state (default 4L).
    #[arg(long)]
    prep_time: Option<usize>,
    /// Measurement layers per time unit (1 or 2).
    #[arg(long, default_value_t = 2)]
    measurement_layers: u32,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CollapseMode {
    /// `(S − α ln L)` against `t·L^{−z}`.
    Relaxation,
    /// `S − δ ln t` against `g·t^{1/(νz)}`.
    ShortTime,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long)]
    p_c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
}

impl ScalingArgs {
    fn params(&self) -> Result<ScalingParams, CliError> {
        let d = ScalingParams::default();
        let p = ScalingParams {
            p_c: self.p_c.unwrap_or(d.p_c),
            alpha: self.alpha.unwrap_or(d.alpha),
            nu: self.nu.unwrap_or(d.nu),
            z: self.z.unwrap_or(d.z),
        };
        p.validate().map_err(core_error)?;
        Ok(p)
    }
}

#[derive(Args)]
struct CollapseArgs {
    /// Series CSV files written by `run` or `sweep`.
    #[arg(required = true, num_args = 2..)]
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = CollapseMode::Relaxation)]
    mode: CollapseMode,
    #[command(flatten)]
    scaling: ScalingArgs,
    /// Smallest t kept (default 1 for relaxation, 4 for short time).
    #[arg(long)]
    t_lo: Option<f64>,
    /// Largest t kept (relaxation; default: whole series).
    #[arg(long)]
    t_hi: Option<f64>,
    /// Short-time cutoff (default min(L/8, 100) of the smallest L).
    #[arg(long)]
    t_cut: Option<f64>,
    /// Growth coefficient subtracted in short-time mode (default α/z).
    #[arg(long)]
    delta: Option<f64>,
    /// Directory for the rescaled curves.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    /// `S = A·t^b`.
    Power,
    /// `S = δ·ln t + c`.
    LogGrowth,
    /// `S = c0 + c1·ln t + c2·(ln t)²`.
    LogQuadratic,
}

#[derive(Args)]
struct FitArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    model: Model,
    /// `lo,hi` in time units (default 4,min(L/8,100)).
    #[arg(long, value_parser = parse_window)]
    window: Option<[f64; 2]>,
    /// Also write the result as JSON to this file.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ScanArgs {
    /// Ring size.
    #[arg(long)]
    size: usize,
    /// Grid of measurement probabilities.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    /// Trajectories per grid point.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Horizon in time units.
    #[arg(long, default_value_t = 100)]
    t_max: usize,
    /// Fit window `lo,hi` (default 4,t_max).
    #[arg(long, value_parser = parse_window)]
    window: Option<[f64; 2]>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn workers(common: &Common, fallback: Option<usize>) -> Option<usize> {
    common.workers.map(|w| w as usize).or(fallback)
}

fn report_outcome(failures: &[String]) -> Result<(), CliError> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Physics(failures.join("; ")))
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.manifest)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.manifest.display())))?;
    let source = args.manifest.display().to_string();
    let m = manifest::parse(&text, &source)?;
    if m.experiments.is_empty() {
        println!("{}: no experiments, nothing to do", m.name);
        return Ok(());
    }
    let ctx = Context {
        config_sha256: sha256_hex(text.as_bytes()),
        config_source: args
            .manifest
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        master_seed: args.common.seed.unwrap_or(m.seed),
        workers: workers(&args.common, m.workers),
        params: m.params,
        conventions: m.conventions.clone(),
    };
    let out = args
        .common
        .out
        .clone()
        .or_else(|| m.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&m.name));
    if args.check {
        println!(
            "{}: {} experiment(s), output {}",
            m.name,
            m.experiments.len(),
            out.display()
        );
        for e in &m.experiments {
            let pts = e.points(&m.params);
            println!(
                "  {}: {} ensemble(s) of {} trajectories, {} analysis directive(s)",
                e.name,
                pts.len(),
                e.n_trajectories,
                e.analyses.len()
            );
        }
        return Ok(());
    }
    let mut failures = Vec::new();
    for e in &m.experiments {
        let dir = out.join(&e.name);
        let o = run_experiment(&ctx, e, &dir)?;
        println!("{}: wrote {}", e.name, dir.display());
        failures.extend(o.failures);
    }
    report_outcome(&failures)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let canonical = serde_json::to_string(args).expect("arguments serialize");
    let grid = if args.w.is_empty() {
        Grid::P(args.p.clone())
    } else {
        Grid::W(args.w.clone())
    };
    let exp = Experiment {
        name: "sweep".into(),
        sizes: args.sizes.clone(),
        grid,
        initial_state: args.init.into(),
        horizon: Horizon::Units(args.t_max),
        n_trajectories: args.n,
        prep_time: args.prep_time,
        analyses: Vec::new(),
    };
    let conventions = Conventions {
        measurement_layers_per_unit: args.measurement_layers,
        ..Conventions::default()
    };
    mipt_core::MeasurementSchedule::from_layers(args.measurement_layers).map_err(core_error)?;
    let ctx = Context {
        config_sha256: sha256_hex(canonical.as_bytes()),
        config_source: "sweep command line".into(),
        master_seed: args.common.seed.unwrap_or(0),
        workers: workers(&args.common, None),
        params: ScalingParams::default(),
        conventions,
    };
    let dir = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out/sweep"));
    let o = run_experiment(&ctx, &exp, &dir)?;
    println!(
        "wrote {} series to {}",
        o.report["series"].as_array().map_or(0, Vec::len),
        dir.display()
    );
    report_outcome(&o.failures)
}

fn cmd_scan(args: &ScanArgs) -> Result<(), CliError> {
    let canonical = serde_json::to_string(args).expect("arguments serialize");
    let window = args.window;
    let exp = Experiment {
        name: "scan-critical".into(),
        sizes: vec![args.size],
        grid: Grid::P(args.p.clone()),
        initial_state: InitialState::Product,
        horizon: Horizon::Units(args.t_max),
        n_trajectories: args.n,
        prep_time: None,
        analyses: vec![Analysis::CriticalScan { window }],
    };
    if args.p.len() < 2 {
        return Err(CliError::Usage(
            "`--p` needs at least two grid points".into(),
        ));
    }
    let ctx = Context {
        config_sha256: sha256_hex(canonical.as_bytes()),
        config_source: "scan-critical command line".into(),
        master_seed: args.common.seed.unwrap_or(0),
        workers: workers(&args.common, None),
        params: ScalingParams::default(),
        conventions: Conventions::default(),
    };
    let dir = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out/scan-critical"));
    let o = run_experiment(&ctx, &exp, &dir)?;
    let scan = &o.report["analyses"][0]["scans"][0]["report"];
    for e in scan["entries"].as_array().into_iter().flatten() {
        let c2 = e["fit"]["coefficients"][2]["value"]
            .as_f64()
            .unwrap_or(f64::NAN);
        println!(
            "p = {:<8} {:<9} c2 = {c2:+.5}{}",
            e["p"],
            e["curvature"].as_str().unwrap_or("?"),
            if e["marginal"].as_bool() == Some(true) {
                "  (marginal)"
            } else {
                ""
            }
        );
    }
    match scan["bracket"].as_array() {
        Some(b) => println!("critical point bracket: [{}, {}]", b[0], b[1]),
        None => println!("critical point outside grid"),
    }
    report_outcome(&o.failures)
}

/// `lo,hi` with 0 <= lo < hi.
fn parse_window(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if !(0.0 <= lo && lo < hi) {
        return Err(format!("window [{lo}, {hi}] is empty"));
    }
    Ok([lo, hi])
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let series = read_series_csv(&args.file).map_err(core_error)?;
    let window = match args.window {
        Some([lo, hi]) => (lo, hi),
        None => default_window(series.l),
    };
    let fit = match args.model {
        Model::Power => fit_power_decay(&series, window),
        Model::LogGrowth => fit_log_growth(&series, window),
        Model::LogQuadratic => fit_log_quadratic(&series, window),
    }
    .map_err(core_error)?;
    let (meta, _) = read_metadata(&args.file).map_err(core_error)?;
    let value = json!({
        "source": args.file.file_name().map(|n| n.to_string_lossy().into_owned()),
        "config_sha256": meta.get("config_sha256"),
        "L": series.l,
        "p": series.p,
        "seed": series.seed,
        "fit": fit,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("JSON values serialize")
    );
    if let Some(out) = &args.out {
        write_json(out, &value)?;
    }
    Ok(())
}

fn cmd_collapse(args: &CollapseArgs) -> Result<(), CliError> {
    let params = args.scaling.params()?;
    let series = args
        .files
        .iter()
        .map(|f| read_series_csv(f).map_err(core_error))
        .collect::<Result<Vec<_>, _>>()?;
    let (curves, score, settings) = match args.mode {
        CollapseMode::Relaxation => {
            let lo = args.t_lo.unwrap_or(1.0);
            let hi = args.t_hi.unwrap_or(f64::INFINITY);
            let (c, s) = relaxation_collapse(&series, &params, lo, hi).map_err(core_error)?;
            (
                c,
                s,
                json!({ "mode": "relaxation", "t_lo": lo, "t_hi": args.t_hi }),
            )
        }
        CollapseMode::ShortTime => {
            let l_min = series
                .iter()
                .map(|s| s.l)
                .min()
                .expect("at least two files");
            let lo = args.t_lo.unwrap_or(4.0);
            let cut = args.t_cut.unwrap_or(default_window(l_min).1);
            let delta = args.delta.unwrap_or(params.delta());
            let (c, s) = short_time_offcritical_collapse(&series, &params, delta, lo, cut)
                .map_err(core_error)?;
            (
                c,
                s,
                json!({ "mode": "short-time", "t_lo": lo, "t_cut": cut, "delta": delta }),
            )
        }
    };
    let mut files = Vec::new();
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
        for (c, src) in curves.iter().zip(&args.files) {
            let (meta, _) = read_metadata(src).map_err(core_error)?;
            let mut m = vec![
                ("alpha".to_string(), params.alpha.to_string()),
                ("nu".to_string(), params.nu.to_string()),
                ("z".to_string(), params.z.to_string()),
                ("p_c".to_string(), params.p_c.to_string()),
            ];
            for key in ["config_sha256", "master_seed", "seed", "initial_state"] {
                if let Some(v) = meta.get(key) {
                    m.push((key.to_string(), v.clone()));
                }
            }
            let name = format!("rescaled_L{}_p{}.csv", c.l, c.p);
            write_curve_csv(&dir.join(&name), c, &m).map_err(core_error)?;
            files.push(name);
        }
    }
    let value = json!({ "settings": settings, "params": params, "score": score, "files": files });
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("JSON values serialize")
    );
    if let Some(dir) = &args.out {
        write_json(&dir.join("collapse.json"), &value)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Collapse(a) => cmd_collapse(a),
        Command::Fit(a) => cmd_fit(a),
        Command::ScanCritical(a) => cmd_scan(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
