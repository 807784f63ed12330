//! Runs one experiment: its ensembles, their files and the requested
//! analyses, all written below one directory.

use std::fs;
use std::path::Path;

use mipt_core::ensemble::{run_ensemble, EnsembleSpec};
use mipt_core::fit::{
    default_window, fit_linear, fit_log_growth, fit_log_quadratic, fit_power_decay,
    fit_steady_alpha, FitResult,
};
use mipt_core::io::{write_curve_csv, write_sweep, Metadata};
use mipt_core::scaling::{
    critical_scan, relaxation_collapse, short_time_offcritical_collapse, RescaledCurve,
};
use mipt_core::{CircuitConfig, EnsembleSeries, InitialState, ScalingParams};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::manifest::{Analysis, Conventions, Experiment, Grid};
use crate::{core_error, CliError};

/// Everything besides the experiment itself that determines the output.
#[derive(Clone, Debug)]
pub struct Context {
    pub config_sha256: String,
    pub config_source: String,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub params: ScalingParams,
    pub conventions: Conventions,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Seed of ensemble `k` of size `l` in `experiment`.
pub fn derive_seed(master: u64, experiment: &str, l: usize, k: usize) -> u64 {
    let digest = Sha256::digest(format!("{master}/{experiment}/{l}/{k}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

impl Context {
    fn metadata(&self, experiment: &str, axes: &str) -> Metadata {
        let kv = |k: &str, v: String| (k.to_string(), v);
        vec![
            kv("config_sha256", self.config_sha256.clone()),
            kv("config_source", self.config_source.clone()),
            kv("experiment", experiment.to_string()),
            kv("master_seed", self.master_seed.to_string()),
            kv(
                "measurement_layers_per_unit",
                self.conventions.measurement_layers_per_unit.to_string(),
            ),
            kv(
                "prep_time_per_site",
                self.conventions.prep_time_per_site.to_string(),
            ),
            kv("p_c", self.params.p_c.to_string()),
            kv("alpha", self.params.alpha.to_string()),
            kv("nu", self.params.nu.to_string()),
            kv("z", self.params.z.to_string()),
            kv("axes", axes.to_string()),
        ]
    }
}

/// Result of an experiment: the report and any physics-level failures.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: Value,
    pub failures: Vec<String>,
}

/// Groups of series (indices into the ensemble list) sharing a grid value,
/// each ordered by size.
fn groups(exp: &Experiment) -> Vec<(String, Vec<usize>)> {
    let (label, values) = match &exp.grid {
        Grid::P(v) => ("p", v),
        Grid::W(v) => ("w", v),
    };
    (0..values.len())
        .map(|k| {
            let members = (0..exp.sizes.len()).map(|i| i * values.len() + k).collect();
            (format!("{label}{}", values[k]), members)
        })
        .collect()
}

fn axes(exp: &Experiment, params: &ScalingParams) -> &'static str {
    let critical = match &exp.grid {
        Grid::P(ps) => ps.iter().all(|&p| p == params.p_c),
        Grid::W(ws) => ws.iter().all(|&w| w == 0.0),
    };
    if exp.initial_state == InitialState::VolumeLaw && critical {
        "t log; S log"
    } else {
        "t log; S linear"
    }
}

pub fn run_experiment(
    ctx: &Context,
    exp: &Experiment,
    dir: &Path,
) -> Result<ExperimentOutcome, CliError> {
    let points = exp.points(&ctx.params);
    let mut series = Vec::with_capacity(points.len());
    let mut listing = Vec::with_capacity(points.len());
    let per_size = points.len() / exp.sizes.len();
    for (idx, &(l, p)) in points.iter().enumerate() {
        let seed = derive_seed(ctx.master_seed, &exp.name, l, idx % per_size);
        let mut cfg = CircuitConfig::new(l, p, exp.initial_state, exp.horizon.t_max(l), seed);
        cfg.prep_time = exp
            .prep_time
            .unwrap_or(ctx.conventions.prep_time_per_site * l);
        cfg.schedule = ctx.conventions.schedule();
        let mut spec = EnsembleSpec::new(cfg, exp.n_trajectories);
        spec.workers = ctx.workers;
        let s = run_ensemble(&spec).map_err(core_error)?;
        s.check_invariants().map_err(core_error)?;
        listing.push(json!({
            "L": l,
            "p": p,
            "w": ctx.params.w(p, l),
            "seed": seed,
            "n_trajectories": s.n_trajectories,
            "t_max": s.t_max(),
            "prep_time": s.prep_time,
            "file": mipt_core::io::series_file_name(&s),
        }));
        series.push(s);
    }

    let axes = axes(exp, &ctx.params);
    let meta = ctx.metadata(&exp.name, axes);
    write_sweep(dir, &series, &meta).map_err(core_error)?;

    let mut failures = Vec::new();
    let mut results = Vec::new();
    for a in &exp.analyses {
        let out = analyse(ctx, exp, a, &series, dir, &meta);
        match out {
            Ok(v) => {
                if let Some(msg) = v.get("failure").and_then(Value::as_str) {
                    failures.push(format!("{}: {msg}", exp.name));
                }
                results.push(v);
            }
            Err(CliError::Physics(msg)) => {
                failures.push(format!("{}: {msg}", exp.name));
                results.push(json!({ "analysis": a, "error": msg }));
            }
            Err(e) => return Err(e),
        }
    }

    let report = json!({
        "config_sha256": ctx.config_sha256,
        "config_source": ctx.config_source,
        "master_seed": ctx.master_seed,
        "experiment": exp.name,
        "initial_state": exp.initial_state.tag(),
        "conventions": ctx.conventions,
        "params": ctx.params,
        "axes": axes,
        "series": listing,
        "analyses": results,
    });
    let mut text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    Ok(ExperimentOutcome { report, failures })
}

fn window_or(w: &Option<[f64; 2]>, default: (f64, f64)) -> (f64, f64) {
    w.map(|[a, b]| (a, b)).unwrap_or(default)
}

fn per_series_fit(
    series: &[EnsembleSeries],
    window: &Option<[f64; 2]>,
    fit: fn(&EnsembleSeries, (f64, f64)) -> mipt_core::Result<FitResult>,
) -> Result<Vec<Value>, CliError> {
    series
        .iter()
        .map(|s| {
            let w = window_or(window, default_window(s.l));
            let r = fit(s, w).map_err(core_error)?;
            Ok(json!({ "L": s.l, "p": s.p, "fit": r }))
        })
        .collect()
}

fn write_curves(
    curves: &[RescaledCurve],
    prefix: &str,
    dir: &Path,
    meta: &Metadata,
) -> Result<Vec<String>, CliError> {
    curves
        .iter()
        .map(|c| {
            let name = format!("{prefix}_L{}_p{}.csv", c.l, c.p);
            write_curve_csv(&dir.join(&name), c, meta).map_err(core_error)?;
            Ok(name)
        })
        .collect()
}

fn pick(series: &[EnsembleSeries], idx: &[usize]) -> Vec<EnsembleSeries> {
    idx.iter().map(|&i| series[i].clone()).collect::<Vec<_>>()
}

fn analyse(
    ctx: &Context,
    exp: &Experiment,
    analysis: &Analysis,
    series: &[EnsembleSeries],
    dir: &Path,
    meta: &Metadata,
) -> Result<Value, CliError> {
    let params = &ctx.params;
    let value = match analysis {
        Analysis::PowerFit { window } => json!({
            "analysis": analysis,
            "fits": per_series_fit(series, window, fit_power_decay)?,
        }),
        Analysis::LogGrowth { window } => json!({
            "analysis": analysis,
            "fits": per_series_fit(series, window, fit_log_growth)?,
        }),
        Analysis::LogQuadratic { window } => json!({
            "analysis": analysis,
            "fits": per_series_fit(series, window, fit_log_quadratic)?,
        }),
        Analysis::RelaxationCollapse { t_lo, t_hi } => {
            let (lo, hi) = (t_lo.unwrap_or(1.0), t_hi.unwrap_or(f64::INFINITY));
            let mut out = Vec::new();
            for (label, idx) in groups(exp) {
                let set = pick(series, &idx);
                let (curves, score) =
                    relaxation_collapse(&set, params, lo, hi).map_err(core_error)?;
                let (_, perturbed) =
                    relaxation_collapse(&set, &params.scaled(1.2, 1.2, 1.2), lo, hi)
                        .map_err(core_error)?;
                let mut m = meta.clone();
                m.push(("columns".into(), "x = t*L^-z, y = S - alpha*ln(L)".into()));
                let files = write_curves(&curves, &format!("rescaled_{label}"), dir, &m)?;
                out.push(json!({
                    "group": label,
                    "score": score,
                    "score_with_alpha_nu_z_raised_20pct": perturbed,
                    "files": files,
                }));
            }
            json!({
                "analysis": analysis,
                "t_lo": lo,
                "t_hi": if hi.is_finite() { json!(hi) } else { json!("end") },
                "groups": out,
            })
        }
        Analysis::ShortTimeCollapse { t_lo, t_cut, delta } => {
            let l_min = *exp.sizes.iter().min().expect("sizes validated non-empty");
            let lo = t_lo.unwrap_or(4.0);
            let cut = t_cut.unwrap_or(default_window(l_min).1);
            let d = delta.unwrap_or(params.delta());
            let mut out = Vec::new();
            for (label, idx) in groups(exp) {
                let set = pick(series, &idx);
                let (curves, score) = short_time_offcritical_collapse(&set, params, d, lo, cut)
                    .map_err(core_error)?;
                let mut m = meta.clone();
                m.push((
                    "columns".into(),
                    "x = g*t^(1/(nu*z)), y = S - delta*ln(t)".into(),
                ));
                m.push(("delta".into(), d.to_string()));
                let files = write_curves(&curves, &format!("short_time_{label}"), dir, &m)?;
                out.push(json!({ "group": label, "score": score, "files": files }));
            }
            json!({
                "analysis": analysis,
                "t_lo": lo,
                "t_cut": cut,
                "delta": d,
                "groups": out,
            })
        }
        Analysis::SteadyAlpha { plateau } => {
            let [a, b] = plateau.unwrap_or([2.0, 4.0]);
            let mut out = Vec::new();
            for (label, idx) in groups(exp) {
                let mut rows = Vec::new();
                for s in pick(series, &idx) {
                    let w = s.window(a * s.l as f64, b * s.l as f64);
                    if w.is_empty() {
                        return Err(CliError::Physics(format!(
                            "L = {}: no points in plateau window [{a}L, {b}L]",
                            s.l
                        )));
                    }
                    let n = w.len() as f64;
                    rows.push((
                        s.l,
                        w.iter().map(|p| p.1).sum::<f64>() / n,
                        w.iter().map(|p| p.2).sum::<f64>() / n,
                    ));
                }
                let fit = fit_steady_alpha(&rows).map_err(core_error)?;
                out.push(json!({ "group": label, "plateaus": rows, "fit": fit }));
            }
            json!({ "analysis": analysis, "plateau_per_site": [a, b], "groups": out })
        }
        Analysis::LinearInSize { at_t, at_x } => {
            let mut out = Vec::new();
            for (label, idx) in groups(exp) {
                let set = pick(series, &idx);
                let mut rows = Vec::new();
                for s in &set {
                    let t = match (at_t, at_x) {
                        (Some(t), _) => *t,
                        (None, Some(x)) => (x * (s.l as f64).powf(params.z)).round() as usize,
                        _ => unreachable!("validated"),
                    };
                    if t > s.t_max() {
                        return Err(CliError::Physics(format!(
                            "L = {}: t = {t} beyond t_max = {}",
                            s.l,
                            s.t_max()
                        )));
                    }
                    rows.push((s.l as f64, t, s.s_mean[t], s.s_stderr[t]));
                }
                let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
                let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
                let e: Vec<f64> = rows.iter().map(|r| r.3).collect();
                let fit = fit_linear(&x, &y, Some(&e)).map_err(core_error)?;
                out.push(json!({ "group": label, "points": rows, "fit": fit }));
            }
            json!({ "analysis": analysis, "groups": out })
        }
        Analysis::CriticalScan { window } => {
            let mut out = Vec::new();
            let mut failure = None;
            let per_size = series.len() / exp.sizes.len();
            for (i, &l) in exp.sizes.iter().enumerate() {
                let set = &series[i * per_size..(i + 1) * per_size];
                let t_max = set.iter().map(|s| s.t_max()).min().unwrap_or(0) as f64;
                let w = window_or(window, (4.0, t_max));
                let rep = critical_scan(set, w).map_err(core_error)?;
                if rep.bracket.is_none() {
                    failure = Some(format!(
                        "L = {l}: critical point outside grid (no upward-to-downward change)"
                    ));
                }
                out.push(json!({ "L": l, "window": w, "report": rep }));
            }
            let mut v = json!({ "analysis": analysis, "scans": out });
            if let Some(f) = failure {
                v["failure"] = json!(f);
            }
            v
        }
    };
    Ok(value)
}
