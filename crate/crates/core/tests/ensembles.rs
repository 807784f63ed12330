//! Statistical and structural properties of trajectories and ensembles.

use mipt_core::clifford::sample_clifford2;
use mipt_core::ensemble::{run_ensemble, EnsembleSpec};
use mipt_core::{
    prepare_initial, run_trajectory, trajectory_rng, BrickWall, CircuitConfig, InitialState,
    MeasurementSchedule, Tableau,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean_over(series: &mipt_core::EnsembleSeries, lo: f64, hi: f64) -> (f64, f64) {
    let w = series.window(lo, hi);
    let n = w.len() as f64;
    (
        w.iter().map(|p| p.1).sum::<f64>() / n,
        w.iter().map(|p| p.2).sum::<f64>() / n,
    )
}

#[test]
fn volume_law_preparation_has_converged() {
    let l = 256;
    let run = |prep: usize| {
        let mut cfg = CircuitConfig::new(l, 0.0, InitialState::VolumeLaw, 1, 31);
        cfg.prep_time = prep;
        run_ensemble(&EnsembleSpec::new(cfg, 24)).unwrap()
    };
    let (a, b) = (run(4 * l), run(8 * l));
    let (sa, sb) = (a.s_mean[0], b.s_mean[0]);
    assert!((sa / sb - 1.0).abs() < 0.05, "4L prep {sa}, 8L prep {sb}");
    // Close to maximal entanglement of a half chain.
    assert!(sa > 0.9 * (l / 2) as f64, "{sa}");
}

#[test]
fn unitary_evolution_keeps_volume_law_stationary() {
    let l = 64;
    let cfg = CircuitConfig::new(l, 0.0, InitialState::VolumeLaw, 32, 5);
    let s = run_ensemble(&EnsembleSpec::new(cfg, 64)).unwrap();
    let start = s.s_mean[0];
    for (t, &m) in s.s_mean.iter().enumerate() {
        assert!((m / start - 1.0).abs() < 0.01, "t = {t}: {m} vs {start}");
    }
}

#[test]
fn stderr_shrinks_as_inverse_root_count() {
    let cfg = CircuitConfig::new(32, 0.0, InitialState::Product, 48, 8);
    let err = |n: usize| {
        let s = run_ensemble(&EnsembleSpec::new(cfg.clone(), n)).unwrap();
        mean_over(&s, 32.0, 48.0).1
    };
    let (e1, e2, e3) = (err(100), err(400), err(1600));
    for (ratio, label) in [(e1 / e2, "100/400"), (e2 / e3, "400/1600")] {
        assert!(
            (ratio / 2.0 - 1.0).abs() < 0.2,
            "stderr ratio {label} = {ratio}"
        );
    }
}

#[test]
fn product_state_at_full_measurement_stays_unentangled() {
    let cfg = CircuitConfig::new(40, 1.0, InitialState::Product, 10, 2);
    let s = run_ensemble(&EnsembleSpec::new(cfg, 20)).unwrap();
    assert!(s.s_mean.iter().all(|&m| m == 0.0));
    assert_eq!(s.mean_measurements, 40.0 * 2.0 * 10.0);
}

#[test]
fn ensemble_is_reproducible_and_worker_independent() {
    let cfg = CircuitConfig::new(24, 0.2, InitialState::VolumeLaw, 20, 99);
    let a = run_ensemble(&EnsembleSpec::new(cfg.clone(), 50).with_workers(1)).unwrap();
    let b = run_ensemble(&EnsembleSpec::new(cfg.clone(), 50).with_workers(3)).unwrap();
    assert_eq!(a, b);
    let other = run_ensemble(&EnsembleSpec::new(CircuitConfig { seed: 100, ..cfg }, 50)).unwrap();
    assert_ne!(a.s_mean, other.s_mean);
}

#[test]
fn public_layer_api_reproduces_trajectory() {
    let mut cfg = CircuitConfig::new(34, 0.12, InitialState::VolumeLaw, 15, 12).with_trajectory(3);
    cfg.prep_time = 20;
    cfg.schedule = MeasurementSchedule::EveryUnit;
    let mut rng = trajectory_rng(cfg.seed, cfg.trajectory_index);
    let mut state = prepare_initial(&cfg, &mut rng).unwrap();
    let mut wall = BrickWall::new(cfg.l).unwrap();
    let mut entropy = vec![mipt_core::half_chain_entropy(&state).unwrap()];
    for _ in 0..cfg.t_max {
        wall.time_unit(&mut state, cfg.p, cfg.schedule, &mut rng);
        entropy.push(mipt_core::half_chain_entropy(&state).unwrap());
    }
    assert_eq!(entropy, run_trajectory(&cfg).unwrap().entropy);
    state.validate().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tableau_invariants_survive_gates_and_measurements(
        n in 2usize..80,
        seed in any::<u64>(),
        ops in 1usize..200,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tableau::new_product_state(n).unwrap();
        for _ in 0..ops {
            if rng.random_bool(0.7) {
                let a = rng.random_range(0..n);
                let b = (a + 1 + rng.random_range(0..n - 1)) % n;
                t.apply_clifford2(&sample_clifford2(&mut rng), a, b).unwrap();
            } else {
                let site = rng.random_range(0..n);
                let before = t.peek_z(site).unwrap();
                let m = t.measure_z(site, &mut rng).unwrap();
                // A repeated measurement is deterministic with the same outcome.
                prop_assert_eq!(
                    t.peek_z(site).unwrap(),
                    mipt_core::ZStatus::Determined(m.outcome)
                );
                prop_assert_eq!(before == mipt_core::ZStatus::Random, !m.deterministic);
            }
        }
        prop_assert!(t.validate().is_ok());
    }

    #[test]
    fn trajectory_entropies_respect_bounds(
        half in 2usize..40,
        p in 0.0f64..=1.0,
        volume in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let l = 2 * half;
        let init = if volume { InitialState::VolumeLaw } else { InitialState::Product };
        let mut cfg = CircuitConfig::new(l, p, init, 12, seed);
        cfg.prep_time = 8;
        let r = run_trajectory(&cfg).unwrap();
        prop_assert_eq!(r.entropy.len(), 13);
        prop_assert!(r.entropy.iter().all(|&s| s as usize <= half));
        if !volume {
            prop_assert_eq!(r.entropy[0], 0);
        }
        // A cut on a ring crosses two gates per sublayer; each changes the
        // entropy by at most two bits, and measurements never raise it.
        for w in r.entropy.windows(2) {
            prop_assert!(w[1] <= w[0] + 8);
        }
        prop_assert_eq!(r, run_trajectory(&cfg).unwrap());
    }

    #[test]
    fn ensemble_series_invariants(
        half in 2usize..12,
        p in 0.0f64..=1.0,
        n in 1usize..20,
        seed in any::<u64>(),
    ) {
        let cfg = CircuitConfig::new(2 * half, p, InitialState::Product, 6, seed);
        let s = run_ensemble(&EnsembleSpec::new(cfg, n)).unwrap();
        prop_assert!(s.check_invariants().is_ok());
        prop_assert_eq!(s.len(), 7);
        if n == 1 {
            prop_assert!(s.s_stderr.iter().all(|&e| e == 0.0));
        }
    }
}
