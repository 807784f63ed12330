//! Critical constants, rescaling of entropy series and collapse scoring.
//!
//! Relaxation rescaling maps a series at size `L` to `x = t·L^{−z}`,
//! `y = S − α·ln L`; curves from different sizes at fixed `w = g·L^{1/ν}`
//! (with `g = p − p_c`) should then fall on one master curve. The
//! size-free short-time form uses `x = g·t^{1/(νz)}`, `y = S − δ·ln t`.

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleSeries;
use crate::error::{Error, Result};
use crate::fit::{fit_log_quadratic, FitResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub p_c: f64,
    pub alpha: f64,
    pub nu: f64,
    pub z: f64,
}

impl Default for ScalingParams {
    fn default() -> Self {
        ScalingParams {
            p_c: 0.15995,
            alpha: 1.57,
            nu: 1.260,
            z: 1.0,
        }
    }
}

impl ScalingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_c > 0.0 && self.p_c < 1.0) {
            return Err(Error::config(
                "p_c",
                format!("must lie in (0, 1), got {}", self.p_c),
            ));
        }
        if !(self.nu > 0.0) {
            return Err(Error::config(
                "nu",
                format!("must be positive, got {}", self.nu),
            ));
        }
        if !(self.z > 0.0) {
            return Err(Error::config(
                "z",
                format!("must be positive, got {}", self.z),
            ));
        }
        if !self.alpha.is_finite() {
            return Err(Error::config("alpha", "must be finite"));
        }
        Ok(())
    }

    pub fn g(&self, p: f64) -> f64 {
        p - self.p_c
    }

    /// `w = g·L^{1/ν}`.
    pub fn w(&self, p: f64, l: usize) -> f64 {
        self.g(p) * (l as f64).powf(1.0 / self.nu)
    }

    /// Inverse of [`ScalingParams::w`]: `p = p_c + w·L^{−1/ν}`.
    pub fn p_at_w(&self, w: f64, l: usize) -> f64 {
        self.p_c + w * (l as f64).powf(-1.0 / self.nu)
    }

    /// Growth coefficient `δ = α/z`.
    pub fn delta(&self) -> f64 {
        self.alpha / self.z
    }

    /// Each of `alpha`, `nu`, `z` scaled by its factor.
    pub fn scaled(&self, alpha: f64, nu: f64, z: f64) -> Self {
        ScalingParams {
            alpha: self.alpha * alpha,
            nu: self.nu * nu,
            z: self.z * z,
            ..*self
        }
    }
}

/// One series in scaling variables, sorted by increasing `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledCurve {
    pub l: usize,
    pub p: f64,
    /// `g·L^{1/ν}` of the source series.
    pub w: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl RescaledCurve {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn sorted(mut self) -> Self {
        let mut idx: Vec<usize> = (0..self.x.len()).collect();
        idx.sort_by(|&a, &b| self.x[a].total_cmp(&self.x[b]));
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        self.t = pick(&self.t);
        self.x = pick(&self.x);
        self.y = pick(&self.y);
        self.stderr = pick(&self.stderr);
        self
    }

    /// Linear interpolation of `(y, variance)` at `x`, or `None` outside
    /// the curve's range.
    pub fn interpolate(&self, x: f64) -> Option<(f64, f64)> {
        let n = self.x.len();
        if n == 0 || x < self.x[0] || x > self.x[n - 1] {
            return None;
        }
        let k = self.x.partition_point(|&v| v < x);
        if k < n && self.x[k] == x {
            return Some((self.y[k], self.stderr[k].powi(2)));
        }
        let (a, b) = (k - 1, k);
        let f = (x - self.x[a]) / (self.x[b] - self.x[a]);
        let y = self.y[a] + f * (self.y[b] - self.y[a]);
        let var = ((1.0 - f) * self.stderr[a]).powi(2) + (f * self.stderr[b]).powi(2);
        Some((y, var))
    }
}

/// `x = t·L^{−z}`, `y = S − α·ln L` for every point of the series.
pub fn rescale(series: &EnsembleSeries, params: &ScalingParams) -> RescaledCurve {
    let l = series.l as f64;
    let shift = params.alpha * l.ln();
    let scale = l.powf(-params.z);
    RescaledCurve {
        l: series.l,
        p: series.p,
        w: params.w(series.p, series.l),
        t: series.t.iter().map(|&t| t as f64).collect(),
        x: series.t.iter().map(|&t| t as f64 * scale).collect(),
        y: series.s_mean.iter().map(|s| s - shift).collect(),
        stderr: series.s_stderr.clone(),
    }
}

/// Inverse of [`rescale`]: `(t, S)` pairs.
pub fn unrescale(curve: &RescaledCurve, params: &ScalingParams) -> Vec<(f64, f64)> {
    let l = curve.l as f64;
    let shift = params.alpha * l.ln();
    let scale = l.powf(params.z);
    curve
        .x
        .iter()
        .zip(&curve.y)
        .map(|(x, y)| (x * scale, y + shift))
        .collect()
}

/// Mean squared mismatch between curves on their overlaps.
///
/// Every point of every curve is compared with each other curve interpolated
/// at the same `x` (points outside the other curve's range are skipped). A
/// squared difference is divided by the combined variance when that is
/// positive and taken as is otherwise. Returns the mean over all comparisons.
pub fn collapse_score(curves: &[RescaledCurve]) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::Fit("collapse needs at least two curves".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, a) in curves.iter().enumerate() {
        for (j, b) in curves.iter().enumerate() {
            if i == j {
                continue;
            }
            for k in 0..a.len() {
                if let Some((yb, vb)) = b.interpolate(a.x[k]) {
                    let d2 = (a.y[k] - yb).powi(2);
                    let var = a.stderr[k].powi(2) + vb;
                    total += if var > 0.0 { d2 / var } else { d2 };
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(total / count as f64)
}

/// Rescales the series, keeping points with `t_lo <= t <= t_hi`, and scores
/// the collapse.
pub fn relaxation_collapse(
    series: &[EnsembleSeries],
    params: &ScalingParams,
    t_lo: f64,
    t_hi: f64,
) -> Result<(Vec<RescaledCurve>, f64)> {
    let curves: Vec<RescaledCurve> = series
        .iter()
        .map(|s| restrict(rescale(s, params), t_lo, t_hi))
        .collect();
    let score = collapse_score(&curves)?;
    Ok((curves, score))
}

fn restrict(c: RescaledCurve, t_lo: f64, t_hi: f64) -> RescaledCurve {
    let keep: Vec<usize> = (0..c.len())
        .filter(|&i| c.t[i] >= t_lo && c.t[i] <= t_hi)
        .collect();
    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
    RescaledCurve {
        t: pick(&c.t),
        x: pick(&c.x),
        y: pick(&c.y),
        stderr: pick(&c.stderr),
        ..c
    }
}

/// Short-time form: `x = g·t^{1/(νz)}`, `y = S − δ·ln t` for
/// `max(t_lo, 1) <= t <= t_cut`, scored with [`collapse_score`].
pub fn short_time_offcritical_collapse(
    series: &[EnsembleSeries],
    params: &ScalingParams,
    delta: f64,
    t_lo: f64,
    t_cut: f64,
) -> Result<(Vec<RescaledCurve>, f64)> {
    let expo = 1.0 / (params.nu * params.z);
    let curves: Vec<RescaledCurve> = series
        .iter()
        .map(|s| {
            let g = params.g(s.p);
            let pts: Vec<(f64, f64, f64)> = s.window(t_lo.max(1.0), t_cut);
            RescaledCurve {
                l: s.l,
                p: s.p,
                w: params.w(s.p, s.l),
                t: pts.iter().map(|p| p.0).collect(),
                x: pts.iter().map(|p| g * p.0.powf(expo)).collect(),
                y: pts.iter().map(|p| p.1 - delta * p.0.ln()).collect(),
                stderr: pts.iter().map(|p| p.2).collect(),
            }
            .sorted()
        })
        .collect();
    let score = collapse_score(&curves)?;
    Ok((curves, score))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Upward,
    Flat,
    Downward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub p: f64,
    pub fit: FitResult,
    pub curvature: Curvature,
    /// Flat, or with smaller |curvature| than both grid neighbours.
    pub marginal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub entries: Vec<ScanEntry>,
    /// `[p of the last upward entry, p of the first downward entry after it]`;
    /// `None` when the grid has no such sign change.
    pub bracket: Option<(f64, f64)>,
}

/// Classifies each series by the quadratic coefficient of `S` in `ln t`
/// over `window`: upward or downward when it differs from zero by more than
/// two standard errors (and by more than round-off), flat otherwise.
pub fn critical_scan(series: &[EnsembleSeries], window: (f64, f64)) -> Result<ScanReport> {
    let mut sorted: Vec<&EnsembleSeries> = series.iter().collect();
    sorted.sort_by(|a, b| a.p.total_cmp(&b.p));
    let mut entries = Vec::with_capacity(sorted.len());
    for s in &sorted {
        let fit = fit_log_quadratic(s, window)?;
        let (c2, e2) = (fit.value("c2"), fit.error("c2"));
        let roundoff = 1e-10
            * s.window(window.0, window.1)
                .iter()
                .fold(1.0f64, |m, v| m.max(v.1.abs()));
        let curvature = if c2.abs() > (2.0 * e2).max(roundoff) {
            if c2 > 0.0 {
                Curvature::Upward
            } else {
                Curvature::Downward
            }
        } else {
            Curvature::Flat
        };
        entries.push(ScanEntry {
            p: s.p,
            fit,
            curvature,
            marginal: false,
        });
    }
    let mag: Vec<f64> = entries.iter().map(|e| e.fit.value("c2").abs()).collect();
    for i in 0..entries.len() {
        let smaller_than_neighbours =
            i > 0 && i + 1 < entries.len() && mag[i] < mag[i - 1] && mag[i] < mag[i + 1];
        entries[i].marginal = entries[i].curvature == Curvature::Flat || smaller_than_neighbours;
    }
    let last_up = entries
        .iter()
        .rposition(|e| e.curvature == Curvature::Upward);
    let bracket = last_up.and_then(|i| {
        entries[i + 1..]
            .iter()
            .find(|e| e.curvature == Curvature::Downward)
            .map(|d| (entries[i].p, d.p))
    });
    Ok(ScanReport { entries, bracket })
}
