//! Experiment manifests: one TOML file naming ensembles, the analyses to run
//! on them and every convention that affects the numbers.
//!
//! Parsing keeps source spans so that validation errors point at a line.

use std::collections::BTreeSet;
use std::ops::Range;
use std::path::PathBuf;

use mipt_core::{InitialState, MeasurementSchedule, ScalingParams};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    name: Spanned<String>,
    seed: u64,
    output_dir: Option<String>,
    workers: Option<Spanned<usize>>,
    params: Option<Spanned<RawParams>>,
    conventions: Option<Spanned<RawConventions>>,
    #[serde(default)]
    experiments: Vec<Spanned<RawExperiment>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    p_c: Option<f64>,
    alpha: Option<f64>,
    nu: Option<f64>,
    z: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConventions {
    measurement_layers_per_unit: Option<u32>,
    prep_time_per_site: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: String,
    sizes: Vec<usize>,
    p: Option<OneOrMany>,
    w: Option<OneOrMany>,
    initial_state: String,
    t_max: Option<usize>,
    t_max_per_site: Option<f64>,
    n_trajectories: usize,
    prep_time: Option<usize>,
    #[serde(default)]
    analyses: Vec<Analysis>,
}

/// An analysis directive; omitted options take the documented defaults,
/// which are echoed into the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Analysis {
    /// `S = A·t^b` per series; default window `[4, min(L/8, 100)]`.
    PowerFit { window: Option<[f64; 2]> },
    /// `S = δ·ln t + c` per series; same default window.
    LogGrowth { window: Option<[f64; 2]> },
    /// Quadratic in `ln t` per series; same default window.
    LogQuadratic { window: Option<[f64; 2]> },
    /// `(S − α ln L)` against `t·L^{−z}` for `t_lo ≤ t ≤ t_hi` (defaults 1
    /// and the full series).
    RelaxationCollapse {
        t_lo: Option<f64>,
        t_hi: Option<f64>,
    },
    /// `S − δ ln t` against `g·t^{1/(νz)}` for `t_lo ≤ t ≤ t_cut`
    /// (defaults 4, `min(L_min/8, 100)`, `δ = α/z`).
    ShortTimeCollapse {
        t_lo: Option<f64>,
        t_cut: Option<f64>,
        delta: Option<f64>,
    },
    /// Plateau mean over `t ∈ [a·L, b·L]` (default `[2, 4]`) against `ln L`.
    SteadyAlpha { plateau: Option<[f64; 2]> },
    /// `S` against `L` at one absolute time `at_t` or one rescaled time
    /// `at_x = t·L^{−z}` (rounded to the nearest recorded `t`).
    LinearInSize {
        at_t: Option<usize>,
        at_x: Option<f64>,
    },
    /// Curvature classification over the `p` grid of each size; default
    /// window `[4, t_max]`.
    CriticalScan { window: Option<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conventions {
    pub measurement_layers_per_unit: u32,
    pub prep_time_per_site: usize,
}

impl Conventions {
    pub fn schedule(&self) -> MeasurementSchedule {
        MeasurementSchedule::from_layers(self.measurement_layers_per_unit)
            .expect("validated at parse time")
    }
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            measurement_layers_per_unit: 2,
            prep_time_per_site: 4,
        }
    }
}

/// A validated experiment: the ensemble grid is `sizes × p values`.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub sizes: Vec<usize>,
    /// Either explicit `p` values or fixed `w = g·L^{1/ν}` values.
    pub grid: Grid,
    pub initial_state: InitialState,
    pub horizon: Horizon,
    pub n_trajectories: usize,
    pub prep_time: Option<usize>,
    pub analyses: Vec<Analysis>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    P(Vec<f64>),
    W(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Units(usize),
    PerSite(f64),
}

impl Horizon {
    pub fn t_max(self, l: usize) -> usize {
        match self {
            Horizon::Units(t) => t,
            Horizon::PerSite(f) => (f * l as f64).ceil() as usize,
        }
    }
}

impl Experiment {
    /// `(L, p)` for every ensemble, sizes outermost.
    pub fn points(&self, params: &ScalingParams) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for &l in &self.sizes {
            match &self.grid {
                Grid::P(ps) => out.extend(ps.iter().map(|&p| (l, p))),
                Grid::W(ws) => out.extend(ws.iter().map(|&w| (l, params.p_at_w(w, l)))),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub params: ScalingParams,
    pub conventions: Conventions,
    pub experiments: Vec<Experiment>,
}

/// 1-based line of byte offset `pos`.
fn line_of(text: &str, pos: usize) -> usize {
    text[..pos.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = …` in the table starting at `span`, or the table's first
/// line. The search stops at the next table header.
fn key_line(text: &str, span: &Range<usize>, key: &str) -> usize {
    let start = text[..span.start.min(text.len())]
        .rfind('\n')
        .map_or(0, |i| i + 1);
    let mut offset = start;
    for (i, line) in text[start..].split_inclusive('\n').enumerate() {
        let trimmed = line.trim_start();
        if i > 0 && trimmed.starts_with('[') {
            break;
        }
        if let Some(rest) = trimmed.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return line_of(text, offset);
            }
        }
        offset += line.len();
    }
    line_of(text, span.start)
}

struct Located<'a> {
    source: &'a str,
}

impl Located<'_> {
    fn error(&self, line: usize, field: &str, reason: impl std::fmt::Display) -> CliError {
        CliError::Usage(format!("{}:{line}: `{field}`: {reason}", self.source))
    }
}

/// Parses and validates a manifest. `source` names the file in messages.
pub fn parse(text: &str, source: &str) -> Result<Manifest, CliError> {
    let raw: RawManifest = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
        CliError::Usage(format!("{source}:{line}: {}", e.message().trim_end()))
    })?;
    let at = Located { source };

    if raw.name.get_ref().trim().is_empty() {
        return Err(at.error(
            line_of(text, raw.name.span().start),
            "name",
            "must not be empty",
        ));
    }
    if let Some(w) = &raw.workers {
        if *w.get_ref() == 0 {
            return Err(at.error(
                line_of(text, w.span().start),
                "workers",
                "must be at least 1",
            ));
        }
    }

    let mut params = ScalingParams::default();
    if let Some(p) = &raw.params {
        let span = p.span();
        let r = p.get_ref();
        params.p_c = r.p_c.unwrap_or(params.p_c);
        params.alpha = r.alpha.unwrap_or(params.alpha);
        params.nu = r.nu.unwrap_or(params.nu);
        params.z = r.z.unwrap_or(params.z);
        if let Err(mipt_core::Error::InvalidConfig { field, reason }) = params.validate() {
            return Err(at.error(
                key_line(text, &span, field),
                &format!("params.{field}"),
                reason,
            ));
        }
    }

    let mut conventions = Conventions::default();
    if let Some(c) = &raw.conventions {
        let span = c.span();
        let r = c.get_ref();
        if let Some(m) = r.measurement_layers_per_unit {
            if MeasurementSchedule::from_layers(m).is_err() {
                let key = "measurement_layers_per_unit";
                return Err(at.error(
                    key_line(text, &span, key),
                    &format!("conventions.{key}"),
                    format!("must be 1 or 2, got {m}"),
                ));
            }
            conventions.measurement_layers_per_unit = m;
        }
        if let Some(f) = r.prep_time_per_site {
            if f == 0 {
                let key = "prep_time_per_site";
                return Err(at.error(
                    key_line(text, &span, key),
                    &format!("conventions.{key}"),
                    "must be at least 1",
                ));
            }
            conventions.prep_time_per_site = f;
        }
    }

    let mut names = BTreeSet::new();
    let mut experiments = Vec::with_capacity(raw.experiments.len());
    for (i, spanned) in raw.experiments.iter().enumerate() {
        let span = spanned.span();
        let e = spanned.get_ref();
        let fail = |key: &str, reason: String| {
            at.error(
                key_line(text, &span, key),
                &format!("experiments[{i}].{key}"),
                reason,
            )
        };
        if e.name.trim().is_empty() || e.name.contains(['/', '\\']) {
            return Err(fail(
                "name",
                "must be a non-empty name without path separators".into(),
            ));
        }
        if !names.insert(e.name.clone()) {
            return Err(fail(
                "name",
                format!("duplicate experiment name `{}`", e.name),
            ));
        }
        if e.sizes.is_empty() {
            return Err(fail("sizes", "must list at least one size".into()));
        }
        if let Some(l) = e.sizes.iter().find(|&&l| l < 4 || l % 2 != 0) {
            return Err(fail(
                "sizes",
                format!("sizes must be even and at least 4, got {l}"),
            ));
        }
        let grid = match (&e.p, &e.w) {
            (Some(p), None) => {
                let ps = p.values();
                if ps.is_empty() {
                    return Err(fail("p", "must list at least one value".into()));
                }
                if let Some(bad) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(fail("p", format!("must lie in [0, 1], got {bad}")));
                }
                Grid::P(ps)
            }
            (None, Some(w)) => {
                let ws = w.values();
                if ws.is_empty() {
                    return Err(fail("w", "must list at least one value".into()));
                }
                for &w in &ws {
                    for &l in &e.sizes {
                        let p = params.p_at_w(w, l);
                        if !(0.0..=1.0).contains(&p) {
                            return Err(fail(
                                "w",
                                format!("w = {w} at L = {l} gives p = {p} outside [0, 1]"),
                            ));
                        }
                    }
                }
                Grid::W(ws)
            }
            _ => return Err(fail("p", "give exactly one of `p` and `w`".into())),
        };
        let initial_state = InitialState::from_tag(&e.initial_state).map_err(|_| {
            fail(
                "initial_state",
                format!("expected `product` or `volume`, got `{}`", e.initial_state),
            )
        })?;
        let horizon = match (e.t_max, e.t_max_per_site) {
            (Some(t), None) if t >= 1 => Horizon::Units(t),
            (Some(t), None) => return Err(fail("t_max", format!("must be at least 1, got {t}"))),
            (None, Some(f)) if f > 0.0 && f.is_finite() => Horizon::PerSite(f),
            (None, Some(f)) => {
                return Err(fail("t_max_per_site", format!("must be positive, got {f}")))
            }
            _ => {
                return Err(fail(
                    "t_max",
                    "give exactly one of `t_max` and `t_max_per_site`".into(),
                ))
            }
        };
        if e.n_trajectories == 0 {
            return Err(fail("n_trajectories", "must be at least 1".into()));
        }
        if e.prep_time == Some(0) {
            return Err(fail("prep_time", "must be at least 1".into()));
        }
        for a in &e.analyses {
            validate_analysis(a).map_err(|reason| fail("kind", reason))?;
        }
        experiments.push(Experiment {
            name: e.name.clone(),
            sizes: e.sizes.clone(),
            grid,
            initial_state,
            horizon,
            n_trajectories: e.n_trajectories,
            prep_time: e.prep_time,
            analyses: e.analyses.clone(),
        });
    }

    Ok(Manifest {
        name: raw.name.into_inner(),
        seed: raw.seed,
        output_dir: raw.output_dir.map(PathBuf::from),
        workers: raw.workers.map(Spanned::into_inner),
        params,
        conventions,
        experiments,
    })
}

fn validate_analysis(a: &Analysis) -> Result<(), String> {
    let window = |w: &Option<[f64; 2]>| match w {
        Some([lo, hi]) if !(*lo > 0.0 && lo < hi) => {
            Err(format!("window [{lo}, {hi}] must satisfy 0 < lo < hi"))
        }
        _ => Ok(()),
    };
    match a {
        Analysis::PowerFit { window: w }
        | Analysis::LogGrowth { window: w }
        | Analysis::LogQuadratic { window: w }
        | Analysis::CriticalScan { window: w } => window(w),
        Analysis::SteadyAlpha { plateau } => window(plateau),
        Analysis::LinearInSize { at_t, at_x } => match (at_t, at_x) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err("linear-in-size needs exactly one of `at_t` and `at_x`".into()),
        },
        Analysis::RelaxationCollapse { .. } | Analysis::ShortTimeCollapse { .. } => Ok(()),
    }
}
