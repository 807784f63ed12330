//! Wall-clock cost of the trajectory loop at a few sizes.
//!
//! `cargo run --release -p mipt-core --example timing`

use std::time::Instant;

use mipt_core::circuit::{run_trajectory, CircuitConfig, InitialState};

fn main() {
    for l in [128usize, 256, 512, 1024] {
        let mut prep = CircuitConfig::new(l, 0.0, InitialState::VolumeLaw, 1, 1);
        prep.prep_time = l;
        let t0 = Instant::now();
        run_trajectory(&prep).unwrap();
        let per_prep_unit = t0.elapsed().as_secs_f64() / l as f64;

        let t_max = 50;
        let mut cfg = CircuitConfig::new(l, 0.16, InitialState::VolumeLaw, t_max, 1);
        cfg.prep_time = l;
        let t0 = Instant::now();
        let r = run_trajectory(&cfg).unwrap();
        let per_unit = (t0.elapsed().as_secs_f64() - per_prep_unit * l as f64) / t_max as f64;
        println!(
            "L={l:5}  prep unit {:8.3} ms  unit at p=0.16 {:8.3} ms  final S {}",
            per_prep_unit * 1e3,
            per_unit * 1e3,
            r.entropy[t_max]
        );
    }
}
