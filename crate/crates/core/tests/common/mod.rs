//! Lock-step replay of a trajectory on a tableau and on the dense oracle.
//!
//! The replay consumes the trajectory stream in the documented order, so its
//! half-chain entropies must equal those of `run_trajectory` for the same
//! config. Every measurement's Born probability is compared between the two
//! simulators before the outcome is applied to both.

#![allow(dead_code)]

use std::sync::OnceLock;

use mipt_core::clifford::{pauli2_label, CLIFFORD2_CLASSES};
use mipt_core::entropy::entanglement_entropy;
use mipt_core::{
    trajectory_rng, CircuitConfig, CliffordGate2, InitialState, MeasurementSchedule, Outcome,
    Region, Tableau,
};
use mipt_statevec::{unitary_from_images, Mat4, PauliString, StateVector};
use rand::Rng;

pub fn gate_unitary(gate: &CliffordGate2) -> Mat4 {
    let cols = gate.columns();
    let images: Vec<String> = (0..4)
        .map(|j| {
            let sign = if (gate.phase_bits() >> j) & 1 == 1 {
                '-'
            } else {
                '+'
            };
            format!("{sign}{}", pauli2_label(cols[j]))
        })
        .collect();
    unitary_from_images([&images[0], &images[1], &images[2], &images[3]])
}

/// Oracle unitaries for every gate class, indexed like `CliffordGate2::from_index`.
pub fn all_unitaries() -> &'static [Mat4] {
    static CACHE: OnceLock<Vec<Mat4>> = OnceLock::new();
    CACHE.get_or_init(|| {
        (0..CLIFFORD2_CLASSES)
            .map(|i| gate_unitary(&CliffordGate2::from_index(i)))
            .collect()
    })
}

pub fn stabilizer_string(t: &Tableau, k: usize) -> PauliString {
    PauliString::parse(&t.stabilizer(k).to_string())
}

#[derive(Debug, Default)]
pub struct ReplayReport {
    /// Half-chain entropy (bits) of the replayed tableau for t = 0..=t_max.
    pub entropy: Vec<u32>,
    pub measurements: u64,
    pub random_outcomes: u64,
    pub entropy_checks: u64,
}

/// Replays `config` on both simulators and returns the first discrepancy.
///
/// `all_regions` additionally compares every contiguous region of up to half
/// the ring after each time unit.
pub fn replay(config: &CircuitConfig, all_regions: bool) -> Result<ReplayReport, String> {
    let l = config.l;
    let unitaries = all_unitaries();
    let mut rng = trajectory_rng(config.seed, config.trajectory_index);
    let mut tab = Tableau::new_product_state(l).map_err(|e| e.to_string())?;
    let mut sv = StateVector::zero_state(l);
    let odd: Vec<(usize, usize)> = (1..l).step_by(2).map(|x| (x, (x + 1) % l)).collect();
    let even: Vec<(usize, usize)> = (0..l).step_by(2).map(|x| (x, x + 1)).collect();
    let mut report = ReplayReport::default();

    let gates = |pairs: &[(usize, usize)],
                 tab: &mut Tableau,
                 sv: &mut StateVector,
                 rng: &mut rand_chacha::ChaCha8Rng| {
        for &(a, b) in pairs {
            let index = rng.random_range(0..CLIFFORD2_CLASSES);
            tab.apply_clifford2(&CliffordGate2::from_index(index), a, b)
                .unwrap();
            sv.apply_two_qubit(&unitaries[index], a, b);
        }
    };
    let measure = |tab: &mut Tableau,
                   sv: &mut StateVector,
                   rng: &mut rand_chacha::ChaCha8Rng,
                   report: &mut ReplayReport|
     -> Result<(), String> {
        if config.p <= 0.0 {
            return Ok(());
        }
        for site in 0..l {
            if !(config.p >= 1.0 || rng.random::<f64>() < config.p) {
                continue;
            }
            let predicted = tab.peek_z(site).unwrap().prob_plus();
            let exact = sv.prob_plus(site);
            if (predicted - exact).abs() > 1e-9 {
                return Err(format!(
                    "site {site}: P(+1) tableau {predicted} vs oracle {exact}"
                ));
            }
            let m = tab.measure_z(site, rng).unwrap();
            if m.deterministic != !(1e-9..=1.0 - 1e-9).contains(&exact) {
                return Err(format!("site {site}: determinism disagrees"));
            }
            sv.project(site, m.outcome == Outcome::Plus);
            report.measurements += 1;
            report.random_outcomes += u64::from(!m.deterministic);
        }
        Ok(())
    };
    let compare = |tab: &Tableau, sv: &StateVector, report: &mut ReplayReport| {
        let half = Region::half_chain(l).unwrap();
        report
            .entropy
            .push(entanglement_entropy(tab, half).unwrap());
        let regions: Vec<Region> = if all_regions {
            (1..=l / 2)
                .flat_map(|len| (0..l).map(move |s| Region::new(s, len, l).unwrap()))
                .collect()
        } else {
            vec![half]
        };
        for region in regions {
            let sites: Vec<usize> = region.sites().collect();
            let exact = sv.von_neumann_entropy(&sites);
            let stab = entanglement_entropy(tab, region).unwrap();
            report.entropy_checks += 1;
            if (exact - stab as f64).abs() > 1e-6 {
                return Err(format!(
                    "region start {} len {}: tableau {stab} bits vs oracle {exact}",
                    region.start(),
                    region.len()
                ));
            }
        }
        Ok(())
    };

    if config.initial_state == InitialState::VolumeLaw {
        for _ in 0..config.prep_time {
            gates(&odd, &mut tab, &mut sv, &mut rng);
            gates(&even, &mut tab, &mut sv, &mut rng);
        }
    }
    compare(&tab, &sv, &mut report)?;
    for _ in 0..config.t_max {
        gates(&odd, &mut tab, &mut sv, &mut rng);
        if config.schedule == MeasurementSchedule::EverySublayer {
            measure(&mut tab, &mut sv, &mut rng, &mut report)?;
        }
        gates(&even, &mut tab, &mut sv, &mut rng);
        measure(&mut tab, &mut sv, &mut rng, &mut report)?;
        compare(&tab, &sv, &mut report)?;
    }
    for k in 0..l {
        let e = sv.expectation(&stabilizer_string(&tab, k));
        if (e.re - 1.0).abs() > 1e-9 || e.im.abs() > 1e-9 {
            return Err(format!("stabilizer {k} has oracle expectation {e}"));
        }
    }
    Ok(report)
}
