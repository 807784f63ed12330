//! Stabilizer simulation of (1+1)D hybrid random-Clifford/measurement
//! brick-wall circuits, with trajectory ensembles and the relaxation scaling
//! analysis of the half-chain entanglement entropy.

pub mod circuit;
pub mod clifford;
pub mod ensemble;
pub mod entropy;
pub mod error;
pub mod fit;
pub mod io;
pub mod pauli;
pub mod scaling;
mod stabilizers;
pub mod tableau;
mod transposed;

pub use circuit::{
    prepare_initial, run_trajectory, run_trajectory_tableau, step, trajectory_rng, BrickWall,
    CircuitConfig, InitialState, MeasurementSchedule, Parity, TrajectoryResult,
};
pub use clifford::{sample_clifford2, CliffordGate2};
pub use ensemble::{run_ensemble, sweep, EnsembleSeries, EnsembleSpec};
pub use entropy::{entanglement_entropy, half_chain_entropy, EntropyWorkspace, Region};
pub use error::{Error, Result};
pub use fit::FitResult;
pub use pauli::{Pauli, PauliRow};
pub use scaling::{RescaledCurve, ScalingParams};
pub use tableau::{Measurement, Outcome, Tableau, ZStatus};

/// Version tag embedded in every output file.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), "-", env!("CARGO_PKG_VERSION"));
