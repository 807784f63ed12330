//! Brick-wall hybrid circuit on a ring of `L` sites.
//!
//! One time unit is two sublayers of random two-site Cliffords: the odd
//! sublayer on pairs `(1,2), (3,4), …, (L−1,0)` followed by the even sublayer
//! on pairs `(0,1), (2,3), …`. Each sublayer is followed by a measurement
//! layer (or only the even one, see [`MeasurementSchedule`]) in which every
//! site is measured in Z independently with probability `p`. The half-chain
//! entropy is recorded once per time unit, after the even sublayer's
//! measurement layer; index 0 of the series is the initial state.
//!
//! Randomness for a trajectory comes from one ChaCha8 stream selected by
//! `(seed, trajectory_index)` and is consumed in this order:
//! 1. volume-law preparation: `prep_time` units of gate draws only;
//! 2. per sublayer, one gate-class draw per pair in increasing pair order;
//! 3. per measurement layer, for each site in increasing order, one `f64`
//!    coin when `0 < p < 1` (none for `p ∈ {0, 1}`), then one `bool` outcome
//!    draw if that site is measured and its outcome is random.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::CLIFFORD2_CLASSES;
use crate::entropy::{EntropyWorkspace, Region};
use crate::error::{Error, Result};
use crate::stabilizers::StabilizerColumns;
use crate::tableau::Tableau;
use crate::transposed::{sliced_gates, SlicedGate, TransposedTableau};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|0…0⟩`, the steady state at `p = 1`.
    Product,
    /// Steady state of the pure unitary brick-wall (`p = 0`).
    VolumeLaw,
}

impl InitialState {
    pub fn tag(self) -> &'static str {
        match self {
            InitialState::Product => "product",
            InitialState::VolumeLaw => "volume",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(InitialState::Product),
            "volume" | "volume_law" => Ok(InitialState::VolumeLaw),
            other => Err(Error::Parse(format!("unknown initial state `{other}`"))),
        }
    }
}

/// Number of measurement layers per time unit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementSchedule {
    /// A measurement layer after each of the two sublayers.
    #[default]
    EverySublayer,
    /// A single measurement layer after the even sublayer.
    EveryUnit,
}

impl MeasurementSchedule {
    pub fn layers_per_unit(self) -> u32 {
        match self {
            MeasurementSchedule::EverySublayer => 2,
            MeasurementSchedule::EveryUnit => 1,
        }
    }

    pub fn from_layers(layers: u32) -> Result<Self> {
        match layers {
            2 => Ok(MeasurementSchedule::EverySublayer),
            1 => Ok(MeasurementSchedule::EveryUnit),
            other => Err(Error::config(
                "measurement_layers_per_unit",
                format!("must be 1 or 2, got {other}"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Odd,
    Even,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    /// Number of sites; even and at least 4.
    pub l: usize,
    /// Measurement probability per site per measurement layer.
    pub p: f64,
    pub initial_state: InitialState,
    /// Number of recorded time units after t = 0.
    pub t_max: usize,
    /// Preparation length in time units (volume-law initial state only).
    pub prep_time: usize,
    pub seed: u64,
    pub trajectory_index: u64,
    pub schedule: MeasurementSchedule,
}

impl CircuitConfig {
    /// Config with the default conventions: two measurement layers per unit
    /// and `prep_time = 4L`.
    pub fn new(l: usize, p: f64, initial_state: InitialState, t_max: usize, seed: u64) -> Self {
        CircuitConfig {
            l,
            p,
            initial_state,
            t_max,
            prep_time: default_prep_time(l),
            seed,
            trajectory_index: 0,
            schedule: MeasurementSchedule::default(),
        }
    }

    pub fn with_trajectory(&self, index: u64) -> Self {
        CircuitConfig {
            trajectory_index: index,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 4 || !self.l.is_multiple_of(2) {
            return Err(Error::config(
                "L",
                format!("must be even and at least 4, got {}", self.l),
            ));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::config(
                "p",
                format!("must lie in [0, 1], got {}", self.p),
            ));
        }
        if self.t_max < 1 {
            return Err(Error::config("t_max", "must be at least 1"));
        }
        if self.initial_state == InitialState::VolumeLaw && self.prep_time < 1 {
            return Err(Error::config(
                "prep_time",
                "must be at least 1 for a volume-law initial state",
            ));
        }
        Ok(())
    }
}

pub fn default_prep_time(l: usize) -> usize {
    4 * l
}

/// The trajectory's random stream.
pub fn trajectory_rng(seed: u64, trajectory_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory_index);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub config: CircuitConfig,
    /// Half-chain entropy in bits for t = 0..=t_max.
    pub entropy: Vec<u32>,
    pub measurement_count: u64,
}

/// Gate pairs for both sublayers of a ring, plus reusable gate and
/// column-major buffers.
#[derive(Clone, Debug)]
pub struct BrickWall {
    l: usize,
    odd: Vec<(usize, usize)>,
    even: Vec<(usize, usize)>,
    gates: Vec<SlicedGate>,
    cols: TransposedTableau,
}

impl BrickWall {
    pub fn new(l: usize) -> Result<Self> {
        if l < 4 || !l.is_multiple_of(2) {
            return Err(Error::config(
                "L",
                format!("must be even and at least 4, got {l}"),
            ));
        }
        let odd = (1..l).step_by(2).map(|x| (x, (x + 1) % l)).collect();
        let even = (0..l).step_by(2).map(|x| (x, x + 1)).collect();
        Ok(BrickWall {
            l,
            odd,
            even,
            gates: Vec::with_capacity(l / 2),
            cols: TransposedTableau::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    pub fn pairs(&self, parity: Parity) -> &[(usize, usize)] {
        match parity {
            Parity::Odd => &self.odd,
            Parity::Even => &self.even,
        }
    }

    /// One sublayer of independent uniformly random two-site Cliffords.
    pub fn unitary_sublayer<R: Rng + ?Sized>(
        &mut self,
        state: &mut Tableau,
        parity: Parity,
        rng: &mut R,
    ) {
        debug_assert_eq!(state.num_qubits(), self.l);
        self.cols.load(state);
        self.sublayer_in_columns(parity, rng);
        self.cols.store(state);
    }

    /// `units` time units of gates only (`p = 0`), with a single change of
    /// layout for the whole run.
    pub fn unitary_units<R: Rng + ?Sized>(
        &mut self,
        state: &mut Tableau,
        units: usize,
        rng: &mut R,
    ) {
        debug_assert_eq!(state.num_qubits(), self.l);
        if units == 0 {
            return;
        }
        self.cols.load(state);
        for _ in 0..units {
            self.sublayer_in_columns(Parity::Odd, rng);
            self.sublayer_in_columns(Parity::Even, rng);
        }
        self.cols.store(state);
    }

    /// Draws one gate per pair of the sublayer into the buffer, consuming
    /// the stream exactly as [`crate::clifford::sample_clifford2`] does.
    fn draw_gates<R: Rng + ?Sized>(&mut self, parity: Parity, rng: &mut R) {
        let count = self.pairs(parity).len();
        let all = sliced_gates();
        self.gates.clear();
        self.gates
            .extend((0..count).map(|_| all[rng.random_range(0..CLIFFORD2_CLASSES)]));
    }

    fn sublayer_in_columns<R: Rng + ?Sized>(&mut self, parity: Parity, rng: &mut R) {
        self.draw_gates(parity, rng);
        let pairs = match parity {
            Parity::Odd => &self.odd,
            Parity::Even => &self.even,
        };
        self.cols.apply(pairs, &self.gates);
    }

    fn stabilizer_sublayer<R: Rng + ?Sized>(
        &mut self,
        state: &mut StabilizerColumns,
        parity: Parity,
        rng: &mut R,
    ) {
        self.draw_gates(parity, rng);
        let pairs = match parity {
            Parity::Odd => &self.odd,
            Parity::Even => &self.even,
        };
        state.apply(pairs, &self.gates);
    }

    /// Measures each site in Z with probability `p`. Returns the number of
    /// measurements performed.
    pub fn measurement_layer<R: Rng + ?Sized>(
        &self,
        state: &mut Tableau,
        p: f64,
        rng: &mut R,
    ) -> u64 {
        measure_sites(self.l, p, rng, |site, rng| {
            state.collapse_z(site, rng).expect("site in range");
        })
    }

    fn stabilizer_unit<R: Rng + ?Sized>(
        &mut self,
        state: &mut StabilizerColumns,
        p: f64,
        schedule: MeasurementSchedule,
        rng: &mut R,
    ) -> u64 {
        let l = self.l;
        let mut count = 0;
        self.stabilizer_sublayer(state, Parity::Odd, rng);
        if schedule == MeasurementSchedule::EverySublayer {
            count += measure_sites(l, p, rng, |site, rng| {
                state.collapse_z(site, rng);
            });
        }
        self.stabilizer_sublayer(state, Parity::Even, rng);
        count
            + measure_sites(l, p, rng, |site, rng| {
                state.collapse_z(site, rng);
            })
    }

    /// A unitary sublayer followed by a measurement layer.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        state: &mut Tableau,
        p: f64,
        rng: &mut R,
        parity: Parity,
    ) -> u64 {
        self.unitary_sublayer(state, parity, rng);
        self.measurement_layer(state, p, rng)
    }

    /// One full time unit under `schedule`.
    pub fn time_unit<R: Rng + ?Sized>(
        &mut self,
        state: &mut Tableau,
        p: f64,
        schedule: MeasurementSchedule,
        rng: &mut R,
    ) -> u64 {
        let mut count = 0;
        self.unitary_sublayer(state, Parity::Odd, rng);
        if schedule == MeasurementSchedule::EverySublayer {
            count += self.measurement_layer(state, p, rng);
        }
        self.unitary_sublayer(state, Parity::Even, rng);
        count + self.measurement_layer(state, p, rng)
    }
}

/// Visits sites `0..l` in order and calls `measure` on each one selected
/// with probability `p`.
fn measure_sites<R: Rng + ?Sized>(
    l: usize,
    p: f64,
    rng: &mut R,
    mut measure: impl FnMut(usize, &mut R),
) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    let mut count = 0;
    for site in 0..l {
        if p >= 1.0 || rng.random::<f64>() < p {
            measure(site, rng);
            count += 1;
        }
    }
    count
}

/// Free-function form of [`BrickWall::step`].
pub fn step<R: Rng + ?Sized>(
    state: &mut Tableau,
    p: f64,
    rng: &mut R,
    parity: Parity,
) -> Result<u64> {
    let mut wall = BrickWall::new(state.num_qubits())?;
    Ok(wall.step(state, p, rng, parity))
}

/// Prepares the initial state, consuming preparation randomness from `rng`.
pub fn prepare_initial<R: Rng + ?Sized>(config: &CircuitConfig, rng: &mut R) -> Result<Tableau> {
    config.validate()?;
    let mut state = Tableau::new_product_state(config.l)?;
    if config.initial_state == InitialState::VolumeLaw {
        BrickWall::new(config.l)?.unitary_units(&mut state, config.prep_time, rng);
    }
    Ok(state)
}

/// Runs one trajectory; deterministic in `(seed, trajectory_index)`.
///
/// Evolves the stabilizers only; the result is identical to driving a
/// [`Tableau`] with [`prepare_initial`] and [`BrickWall::time_unit`] from the
/// same stream.
pub fn run_trajectory(config: &CircuitConfig) -> Result<TrajectoryResult> {
    config.validate()?;
    let mut rng = trajectory_rng(config.seed, config.trajectory_index);
    let mut wall = BrickWall::new(config.l)?;
    let mut state = StabilizerColumns::product_state(config.l);
    if config.initial_state == InitialState::VolumeLaw {
        for _ in 0..config.prep_time {
            wall.stabilizer_sublayer(&mut state, Parity::Odd, &mut rng);
            wall.stabilizer_sublayer(&mut state, Parity::Even, &mut rng);
        }
    }
    let half = Region::half_chain(config.l)?;
    let mut entropy = Vec::with_capacity(config.t_max + 1);
    entropy.push(state.entropy(half));
    let mut measurement_count = 0;
    for _ in 0..config.t_max {
        measurement_count += wall.stabilizer_unit(&mut state, config.p, config.schedule, &mut rng);
        entropy.push(state.entropy(half));
    }
    Ok(TrajectoryResult {
        config: config.clone(),
        entropy,
        measurement_count,
    })
}

/// [`run_trajectory`] on a full tableau with the public layer API.
pub fn run_trajectory_tableau(config: &CircuitConfig) -> Result<TrajectoryResult> {
    let mut rng = trajectory_rng(config.seed, config.trajectory_index);
    let mut state = prepare_initial(config, &mut rng)?;
    let mut wall = BrickWall::new(config.l)?;
    let mut ws = EntropyWorkspace::new();
    let half = Region::half_chain(config.l)?;
    let mut entropy = Vec::with_capacity(config.t_max + 1);
    entropy.push(ws.entropy(&state, half)?);
    let mut measurement_count = 0;
    for _ in 0..config.t_max {
        measurement_count += wall.time_unit(&mut state, config.p, config.schedule, &mut rng);
        entropy.push(ws.entropy(&state, half)?);
    }
    Ok(TrajectoryResult {
        config: config.clone(),
        entropy,
        measurement_count,
    })
}
