//! Trajectory ensembles: many independent runs of one circuit configuration,
//! reduced to the mean and standard error of the half-chain entropy.
//!
//! Aggregation keeps exact integer sums of `S` and `S²` per time, so the
//! result does not depend on the order in which trajectories finish or on the
//! number of workers.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{run_trajectory, CircuitConfig, InitialState, MeasurementSchedule};
use crate::error::{Error, Result};
use crate::scaling::ScalingParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Shared configuration; its `trajectory_index` is ignored.
    pub base: CircuitConfig,
    pub n_trajectories: usize,
    /// Worker threads; `None` uses all available cores.
    pub workers: Option<usize>,
}

impl EnsembleSpec {
    pub fn new(base: CircuitConfig, n_trajectories: usize) -> Self {
        EnsembleSpec {
            base,
            n_trajectories,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_trajectories < 1 {
            return Err(Error::config("n_trajectories", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        Ok(())
    }
}

/// Exact per-time sums over trajectories.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Accumulator {
    pub count: u64,
    pub sum: Vec<u64>,
    pub sum_sq: Vec<u64>,
    pub measurements: u64,
}

impl Accumulator {
    pub fn new(len: usize) -> Self {
        Accumulator {
            count: 0,
            sum: vec![0; len],
            sum_sq: vec![0; len],
            measurements: 0,
        }
    }

    pub fn add(&mut self, entropy: &[u32], measurements: u64) {
        debug_assert_eq!(entropy.len(), self.sum.len());
        for ((s, q), &e) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(entropy) {
            *s += e as u64;
            *q += (e as u64) * (e as u64);
        }
        self.count += 1;
        self.measurements += measurements;
    }

    pub fn merge(mut self, other: Accumulator) -> Accumulator {
        if self.count == 0 {
            return other;
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.count += other.count;
        self.measurements += other.measurements;
        self
    }

    /// Sample mean and standard error of the mean at each time; the error is
    /// zero for a single trajectory.
    pub fn statistics(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.count as f64;
        let mut mean = Vec::with_capacity(self.sum.len());
        let mut stderr = Vec::with_capacity(self.sum.len());
        for (&s, &q) in self.sum.iter().zip(&self.sum_sq) {
            let m = s as f64 / n;
            mean.push(m);
            if self.count < 2 {
                stderr.push(0.0);
            } else {
                // (Σx² − (Σx)²/n) evaluated in integers to avoid cancellation.
                let num = (q as u128) * (self.count as u128) - (s as u128) * (s as u128);
                let var = num as f64 / (n * (n - 1.0));
                stderr.push((var / n).sqrt());
            }
        }
        (mean, stderr)
    }
}

/// Trajectory-averaged half-chain entropy with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries {
    pub l: usize,
    pub p: f64,
    pub initial_state: InitialState,
    pub t: Vec<usize>,
    /// Mean entropy in bits.
    pub s_mean: Vec<f64>,
    pub s_stderr: Vec<f64>,
    pub n_trajectories: usize,
    pub seed: u64,
    pub code_version: String,
    pub schedule: MeasurementSchedule,
    pub prep_time: usize,
    /// Mean number of measurements per trajectory.
    pub mean_measurements: f64,
}

impl EnsembleSeries {
    pub fn from_accumulator(base: &CircuitConfig, acc: &Accumulator) -> Self {
        let (s_mean, s_stderr) = acc.statistics();
        EnsembleSeries {
            l: base.l,
            p: base.p,
            initial_state: base.initial_state,
            t: (0..s_mean.len()).collect(),
            s_mean,
            s_stderr,
            n_trajectories: acc.count as usize,
            seed: base.seed,
            code_version: crate::CODE_VERSION.to_string(),
            schedule: base.schedule,
            prep_time: base.prep_time,
            mean_measurements: acc.measurements as f64 / acc.count.max(1) as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_max(&self) -> usize {
        self.t.last().copied().unwrap_or(0)
    }

    /// Points with `lo <= t <= hi` as `(t, mean, stderr)`.
    pub fn window(&self, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
        self.t
            .iter()
            .zip(&self.s_mean)
            .zip(&self.s_stderr)
            .map(|((&t, &m), &e)| (t as f64, m, e))
            .filter(|&(t, _, _)| t >= lo && t <= hi)
            .collect()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let n = self.t.len();
        if self.s_mean.len() != n || self.s_stderr.len() != n {
            return Err(Error::BrokenInvariant(
                "series arrays differ in length".into(),
            ));
        }
        let bound = (self.l / 2) as f64;
        for (i, (&m, &e)) in self.s_mean.iter().zip(&self.s_stderr).enumerate() {
            if !(0.0..=bound).contains(&m) || e < 0.0 || !e.is_finite() {
                return Err(Error::BrokenInvariant(format!(
                    "point {i}: mean {m}, stderr {e} out of bounds"
                )));
            }
        }
        Ok(())
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

fn run_one(base: &CircuitConfig, index: u64) -> Result<(Vec<u32>, u64)> {
    let cfg = base.with_trajectory(index);
    let outcome = catch_unwind(AssertUnwindSafe(|| run_trajectory(&cfg)));
    let fail = |reason: String| Error::Trajectory {
        index,
        seed: base.seed,
        reason,
    };
    match outcome {
        Ok(Ok(r)) => Ok((r.entropy, r.measurement_count)),
        Ok(Err(e)) => Err(fail(e.to_string())),
        Err(payload) => Err(fail(panic_message(payload))),
    }
}

/// Runs trajectories `0..n` and aggregates them.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleSeries> {
    spec.validate()?;
    let base = &spec.base;
    let len = base.t_max + 1;
    let work = || {
        (0..spec.n_trajectories as u64)
            .into_par_iter()
            .map(|i| run_one(base, i))
            .try_fold(
                || Accumulator::new(len),
                |mut acc, r| {
                    let (entropy, m) = r?;
                    acc.add(&entropy, m);
                    Ok::<_, Error>(acc)
                },
            )
            .try_reduce(|| Accumulator::new(len), |a, b| Ok(a.merge(b)))
    };
    let acc = match spec.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    Ok(EnsembleSeries::from_accumulator(base, &acc))
}

/// Runs each spec in order.
pub fn sweep(specs: &[EnsembleSpec]) -> Result<Vec<EnsembleSeries>> {
    specs.iter().map(run_ensemble).collect()
}

/// One spec per size at fixed `w = g·L^{1/ν}`, i.e. `p = p_c + w·L^{−1/ν}`.
pub fn fixed_w_specs(
    template: &EnsembleSpec,
    sizes: &[usize],
    w: f64,
    params: &ScalingParams,
) -> Result<Vec<EnsembleSpec>> {
    sizes
        .iter()
        .map(|&l| {
            let p = params.p_at_w(w, l);
            let mut spec = template.clone();
            spec.base.l = l;
            spec.base.p = p;
            spec.base.prep_time = crate::circuit::default_prep_time(l);
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}
