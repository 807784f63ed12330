//! Weighted least-squares fits of entropy series.
//!
//! Weights are inverse variances from the ensemble standard errors; when any
//! error in the window is zero the fit is unweighted. Parameter errors come
//! from the covariance `(AᵀWA)⁻¹`, inflated by the reduced chi-square when it
//! exceeds one (time points of one ensemble are correlated, so the nominal
//! errors would otherwise be too small).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleSeries;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `S = A·t^b`, fitted as a line in log-log.
    Power,
    /// `S = δ·ln t + c`.
    LogLinear,
    /// `y = a·x + b`.
    Linear,
    /// `S = c0 + c1·ln t + c2·(ln t)²`.
    Quadratic,
}

impl FitModel {
    pub fn tag(self) -> &'static str {
        match self {
            FitModel::Power => "power",
            FitModel::LogLinear => "log-linear",
            FitModel::Linear => "linear",
            FitModel::Quadratic => "quadratic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
    /// One-sigma error.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficients: Vec<Coefficient>,
    /// Inclusive range of the independent variable used.
    pub window: (f64, f64),
    pub n_points: usize,
    pub reduced_chi2: f64,
    /// Coefficient of determination of the linearized fit.
    pub r_squared: f64,
    pub weighted: bool,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Value of a coefficient known to exist for this model.
    pub fn value(&self, name: &str) -> f64 {
        self.coefficient(name).map(|c| c.value).unwrap_or(f64::NAN)
    }

    pub fn error(&self, name: &str) -> f64 {
        self.coefficient(name).map(|c| c.error).unwrap_or(f64::NAN)
    }
}

/// Result of a polynomial least-squares fit in one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFit {
    /// Coefficients by ascending power.
    pub coef: Vec<f64>,
    pub errors: Vec<f64>,
    pub reduced_chi2: f64,
    pub r_squared: f64,
    pub weighted: bool,
}

/// Polynomial fit of `y(x)` of the given degree. `sigma` gives per-point
/// errors; all must be positive for the fit to be weighted.
pub fn polyfit(x: &[f64], y: &[f64], sigma: Option<&[f64]>, degree: usize) -> Result<PolyFit> {
    let n = x.len();
    let k = degree + 1;
    if y.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(Error::Fit("length mismatch".into()));
    }
    if n < k + 1 {
        return Err(Error::Fit(format!(
            "{n} points are too few for degree {degree}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite input".into()));
    }
    let weighted = sigma.is_some_and(|s| s.iter().all(|&e| e > 0.0 && e.is_finite()));
    let w: Vec<f64> = match sigma {
        Some(s) if weighted => s.iter().map(|e| 1.0 / (e * e)).collect(),
        _ => vec![1.0; n],
    };
    let a = DMatrix::from_fn(n, k, |i, j| x[i].powi(j as i32));
    let mut ata = DMatrix::<f64>::zeros(k, k);
    let mut aty = DVector::<f64>::zeros(k);
    for i in 0..n {
        for r in 0..k {
            aty[r] += w[i] * a[(i, r)] * y[i];
            for c in 0..k {
                ata[(r, c)] += w[i] * a[(i, r)] * a[(i, c)];
            }
        }
    }
    let cov = ata
        .try_inverse()
        .ok_or_else(|| Error::Fit("degenerate design (repeated x values?)".into()))?;
    let coef = &cov * aty;
    let resid: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..k).map(|j| coef[j] * a[(i, j)]).sum::<f64>())
        .collect();
    let chi2: f64 = resid.iter().zip(&w).map(|(r, w)| w * r * r).sum();
    let dof = (n - k) as f64;
    let reduced = chi2 / dof;
    // Unweighted: residual variance sets the scale. Weighted: only inflate.
    let scale = if weighted { reduced.max(1.0) } else { reduced };
    let errors = (0..k)
        .map(|j| (cov[(j, j)] * scale).max(0.0).sqrt())
        .collect();
    let ybar = y.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / w.iter().sum::<f64>();
    let sst: f64 = y.iter().zip(&w).map(|(y, w)| w * (y - ybar).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - chi2 / sst } else { 1.0 };
    Ok(PolyFit {
        coef: coef.iter().copied().collect(),
        errors,
        reduced_chi2: reduced,
        r_squared,
        weighted,
    })
}

/// Default short-time window `[4, min(L/8, 100)]`.
pub fn default_window(l: usize) -> (f64, f64) {
    (4.0, ((l / 8) as f64).min(100.0))
}

fn columns(points: &[(f64, f64, f64)]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let t = points.iter().map(|p| p.0).collect();
    let m = points.iter().map(|p| p.1).collect();
    let e = points.iter().map(|p| p.2).collect();
    (t, m, e)
}

fn windowed(
    series: &EnsembleSeries,
    window: (f64, f64),
    min_points: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Fit(format!("empty window [{lo}, {hi}]")));
    }
    let pts = series.window(lo, hi);
    if pts.len() < min_points {
        return Err(Error::Fit(format!(
            "window [{lo}, {hi}] holds {} points, need {min_points}",
            pts.len()
        )));
    }
    Ok(pts)
}

fn result(
    model: FitModel,
    names: &[&str],
    values: &[(f64, f64)],
    window: (f64, f64),
    n: usize,
    fit: &PolyFit,
) -> FitResult {
    FitResult {
        model,
        coefficients: names
            .iter()
            .zip(values)
            .map(|(name, &(value, error))| Coefficient {
                name: name.to_string(),
                value,
                error,
            })
            .collect(),
        window,
        n_points: n,
        reduced_chi2: fit.reduced_chi2,
        r_squared: fit.r_squared,
        weighted: fit.weighted,
    }
}

/// `S = A·t^b` over `window`; coefficients `exponent` and `amplitude`.
pub fn fit_power_decay(series: &EnsembleSeries, window: (f64, f64)) -> Result<FitResult> {
    let pts = windowed(series, window, 3)?;
    if let Some(p) = pts.iter().find(|p| p.1 <= 0.0 || p.0 <= 0.0) {
        return Err(Error::Fit(format!("non-positive value at t = {}", p.0)));
    }
    let (t, m, e) = columns(&pts);
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = m.iter().map(|v| v.ln()).collect();
    let le: Vec<f64> = e.iter().zip(&m).map(|(e, m)| e / m).collect();
    let fit = polyfit(&lx, &ly, Some(&le), 1)?;
    let amp = fit.coef[0].exp();
    Ok(result(
        FitModel::Power,
        &["exponent", "amplitude"],
        &[(fit.coef[1], fit.errors[1]), (amp, amp * fit.errors[0])],
        window,
        pts.len(),
        &fit,
    ))
}

/// `S = δ·ln t + c` over `window`; coefficients `delta` and `c`.
pub fn fit_log_growth(series: &EnsembleSeries, window: (f64, f64)) -> Result<FitResult> {
    let pts = windowed(series, window, 3)?;
    if pts.iter().any(|p| p.0 <= 0.0) {
        return Err(Error::Fit("window must exclude t = 0".into()));
    }
    let (t, m, e) = columns(&pts);
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let fit = polyfit(&lx, &m, Some(&e), 1)?;
    Ok(result(
        FitModel::LogLinear,
        &["delta", "c"],
        &[(fit.coef[1], fit.errors[1]), (fit.coef[0], fit.errors[0])],
        window,
        pts.len(),
        &fit,
    ))
}

/// Quadratic in `ln t`; coefficients `c0`, `c1`, `c2`.
pub fn fit_log_quadratic(series: &EnsembleSeries, window: (f64, f64)) -> Result<FitResult> {
    let pts = windowed(series, window, 4)?;
    if pts.iter().any(|p| p.0 <= 0.0) {
        return Err(Error::Fit("window must exclude t = 0".into()));
    }
    let (t, m, e) = columns(&pts);
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let fit = polyfit(&lx, &m, Some(&e), 2)?;
    let vals: Vec<(f64, f64)> = fit
        .coef
        .iter()
        .copied()
        .zip(fit.errors.iter().copied())
        .collect();
    Ok(result(
        FitModel::Quadratic,
        &["c0", "c1", "c2"],
        &vals,
        window,
        pts.len(),
        &fit,
    ))
}

/// Straight line through `(x, y ± err)`; coefficients `slope` and
/// `intercept`. The window records the x range.
pub fn fit_linear(x: &[f64], y: &[f64], err: Option<&[f64]>) -> Result<FitResult> {
    let fit = polyfit(x, y, err, 1)?;
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(result(
        FitModel::Linear,
        &["slope", "intercept"],
        &[(fit.coef[1], fit.errors[1]), (fit.coef[0], fit.errors[0])],
        (lo, hi),
        x.len(),
        &fit,
    ))
}

/// Slope of plateau entropy against `ln L`; needs at least four sizes.
/// Input is `(L, plateau mean, plateau error)`.
pub fn fit_steady_alpha(plateaus: &[(usize, f64, f64)]) -> Result<FitResult> {
    if plateaus.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 sizes, got {}",
            plateaus.len()
        )));
    }
    let x: Vec<f64> = plateaus.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = plateaus.iter().map(|p| p.1).collect();
    let e: Vec<f64> = plateaus.iter().map(|p| p.2).collect();
    let mut r = fit_linear(&x, &y, Some(&e))?;
    r.coefficients[0].name = "alpha".into();
    Ok(r)
}
