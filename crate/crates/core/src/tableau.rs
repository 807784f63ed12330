//! Stabilizer tableau with destabilizer bookkeeping.
//!
//! Rows `0..n` are destabilizers and rows `n..2n` are stabilizers. Each row is
//! stored contiguously as `[x words | z words]` so that row products and
//! symplectic products run over machine words.

use std::fmt;

use rand::Rng;

use crate::clifford::{CliffordGate2, GateTable};
use crate::error::{Error, Result};
use crate::pauli::{anticommutes, get_bit, product_phase, words_for, Pauli, PauliRow};

/// Result of a single-site Z measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    fn from_negative(negative: bool) -> Self {
        if negative {
            Outcome::Minus
        } else {
            Outcome::Plus
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub outcome: Outcome,
    /// `false` when the outcome was drawn with probability 1/2.
    pub deterministic: bool,
}

/// What a Z measurement on a site would yield, without performing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZStatus {
    Random,
    Determined(Outcome),
}

impl ZStatus {
    /// Born probability of the `+1` outcome.
    pub fn prob_plus(self) -> f64 {
        match self {
            ZStatus::Random => 0.5,
            ZStatus::Determined(Outcome::Plus) => 1.0,
            ZStatus::Determined(Outcome::Minus) => 0.0,
        }
    }
}

#[derive(Clone)]
pub struct Tableau {
    pub(crate) n: usize,
    pub(crate) w: usize,
    pub(crate) data: Vec<u64>,
    pub(crate) negative: Vec<bool>,
    scratch: Vec<u64>,
}

impl PartialEq for Tableau {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.data == other.data && self.negative == other.negative
    }
}

impl Eq for Tableau {}

impl Tableau {
    /// The all-zeros product state: stabilizers `Z_i`, destabilizers `X_i`.
    pub fn new_product_state(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyRegister);
        }
        let w = words_for(n);
        let mut t = Tableau {
            n,
            w,
            data: vec![0; 4 * n * w],
            negative: vec![false; 2 * n],
            scratch: vec![0; 2 * w],
        };
        for i in 0..n {
            t.x_mut(i)[i >> 6] |= 1 << (i & 63);
            t.z_mut(i + n)[i >> 6] |= 1 << (i & 63);
        }
        Ok(t)
    }

    /// Builds a tableau from explicit destabilizer and stabilizer rows and
    /// checks every invariant.
    pub fn from_rows(destabilizers: &[PauliRow], stabilizers: &[PauliRow]) -> Result<Self> {
        let n = stabilizers.len();
        if n == 0 {
            return Err(Error::EmptyRegister);
        }
        if destabilizers.len() != n
            || destabilizers
                .iter()
                .chain(stabilizers)
                .any(|r| r.len() != n)
        {
            return Err(Error::Parse(format!(
                "expected {n} destabilizers and {n} stabilizers on {n} qubits"
            )));
        }
        let mut t = Self::new_product_state(n)?;
        for (i, row) in destabilizers.iter().chain(stabilizers).enumerate() {
            t.x_mut(i).copy_from_slice(row.x_bits());
            t.z_mut(i).copy_from_slice(row.z_bits());
            t.negative[i] = row.is_negative();
        }
        t.validate()?;
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn stride(&self) -> usize {
        2 * self.w
    }

    #[inline]
    pub(crate) fn x(&self, row: usize) -> &[u64] {
        let s = row * self.stride();
        &self.data[s..s + self.w]
    }

    #[inline]
    pub(crate) fn z(&self, row: usize) -> &[u64] {
        let s = row * self.stride() + self.w;
        &self.data[s..s + self.w]
    }

    #[inline]
    fn x_mut(&mut self, row: usize) -> &mut [u64] {
        let s = row * self.stride();
        &mut self.data[s..s + self.w]
    }

    #[inline]
    fn z_mut(&mut self, row: usize) -> &mut [u64] {
        let s = row * self.stride() + self.w;
        &mut self.data[s..s + self.w]
    }

    /// Packed x bits of stabilizer `k` (row `n + k`).
    pub fn stabilizer_x(&self, k: usize) -> &[u64] {
        self.x(self.n + k)
    }

    pub fn stabilizer_z(&self, k: usize) -> &[u64] {
        self.z(self.n + k)
    }

    pub fn row(&self, i: usize) -> PauliRow {
        PauliRow::from_parts(self.n, self.x(i), self.z(i), self.negative[i])
    }

    pub fn stabilizer(&self, k: usize) -> PauliRow {
        self.row(self.n + k)
    }

    pub fn destabilizer(&self, k: usize) -> PauliRow {
        self.row(k)
    }

    pub fn stabilizers(&self) -> impl Iterator<Item = PauliRow> + '_ {
        (0..self.n).map(move |k| self.stabilizer(k))
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n {
            return Err(Error::SiteOutOfRange { site, n: self.n });
        }
        Ok(())
    }

    /// Conjugates every row by `gate` acting on `(a, b)`; `a` plays the role
    /// of the gate's first qubit.
    pub fn apply_clifford2(&mut self, gate: &CliffordGate2, a: usize, b: usize) -> Result<()> {
        self.check_site(a)?;
        self.check_site(b)?;
        if a == b {
            return Err(Error::CoincidentSites(a));
        }
        if !gate.is_symplectic() || !gate.is_invertible() {
            return Err(Error::NotSymplectic);
        }
        self.apply_layer(&[(a, b)], &[gate.table()]);
        Ok(())
    }

    /// Applies a layer of gates on pairwise disjoint site pairs. Sites are
    /// assumed valid; the row loop is outermost so each row stays in cache
    /// while the whole layer is applied to it.
    pub(crate) fn apply_layer(&mut self, pairs: &[(usize, usize)], tables: &[GateTable]) {
        debug_assert_eq!(pairs.len(), tables.len());
        let (w, stride) = (self.w, self.stride());
        for (row, neg) in self
            .data
            .chunks_exact_mut(stride)
            .zip(self.negative.iter_mut())
        {
            let (x, z) = row.split_at_mut(w);
            let mut flip = false;
            for (&(a, b), table) in pairs.iter().zip(tables) {
                let (wa, sa) = (a >> 6, a & 63);
                let (wb, sb) = (b >> 6, b & 63);
                let v = ((x[wa] >> sa) & 1)
                    | (((x[wb] >> sb) & 1) << 1)
                    | (((z[wa] >> sa) & 1) << 2)
                    | (((z[wb] >> sb) & 1) << 3);
                let e = table.0[v as usize] as u64;
                let d = (e ^ v) & 15;
                if d != 0 {
                    x[wa] ^= (d & 1) << sa;
                    x[wb] ^= ((d >> 1) & 1) << sb;
                    z[wa] ^= ((d >> 2) & 1) << sa;
                    z[wb] ^= ((d >> 3) & 1) << sb;
                }
                flip ^= e >> 4 == 1;
            }
            *neg ^= flip;
        }
    }

    /// Reports whether measuring `Z_site` would be random or deterministic,
    /// and in the latter case which outcome it would produce.
    pub fn peek_z(&self, site: usize) -> Result<ZStatus> {
        self.check_site(site)?;
        if self.random_pivot(site).is_some() {
            return Ok(ZStatus::Random);
        }
        let mut scratch = self.scratch.clone();
        Ok(ZStatus::Determined(
            self.deterministic_outcome(site, &mut scratch),
        ))
    }

    fn random_pivot(&self, site: usize) -> Option<usize> {
        (self.n..2 * self.n).find(|&r| get_bit(self.x(r), site))
    }

    fn deterministic_outcome(&self, site: usize, scratch: &mut [u64]) -> Outcome {
        let w = self.w;
        scratch.fill(0);
        let mut phase = 0u32;
        for i in 0..self.n {
            if get_bit(self.x(i), site) {
                let r = i + self.n;
                let (sx, sz) = scratch.split_at_mut(w);
                phase += product_phase(self.x(r), self.z(r), sx, sz) + 2 * self.negative[r] as u32;
                for k in 0..w {
                    sx[k] ^= self.x(r)[k];
                    sz[k] ^= self.z(r)[k];
                }
            }
        }
        debug_assert!(phase & 1 == 0);
        Outcome::from_negative(phase & 3 == 2)
    }

    /// Projective Z measurement on `site` with Born-rule outcome.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, site: usize, rng: &mut R) -> Result<Measurement> {
        self.check_site(site)?;
        match self.random_pivot(site) {
            Some(p) => Ok(self.collapse_random(p, site, rng)),
            None => {
                let mut scratch = std::mem::take(&mut self.scratch);
                let outcome = self.deterministic_outcome(site, &mut scratch);
                self.scratch = scratch;
                Ok(Measurement {
                    outcome,
                    deterministic: true,
                })
            }
        }
    }

    /// Same state update as [`Tableau::measure_z`], but a deterministic
    /// outcome is not computed (the state does not change in that case).
    /// Returns `true` if the outcome was random.
    pub fn collapse_z<R: Rng + ?Sized>(&mut self, site: usize, rng: &mut R) -> Result<bool> {
        self.check_site(site)?;
        match self.random_pivot(site) {
            Some(p) => {
                self.collapse_random(p, site, rng);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Random branch: every other row with an X component on `site` is
    /// multiplied by the pivot stabilizer `p`, the pivot moves to the
    /// destabilizer slot and is replaced by `±Z_site`.
    fn collapse_random<R: Rng + ?Sized>(
        &mut self,
        p: usize,
        site: usize,
        rng: &mut R,
    ) -> Measurement {
        let n = self.n;
        let w = self.w;
        let stride = self.stride();
        let mut pivot = std::mem::take(&mut self.scratch);
        pivot.copy_from_slice(&self.data[p * stride..(p + 1) * stride]);
        let pivot_neg = self.negative[p];
        let (px, pz) = pivot.split_at(w);
        let (word, bit) = (site >> 6, site & 63);
        for (i, row) in self.data.chunks_exact_mut(stride).enumerate() {
            if (row[word] >> bit) & 1 == 0 || i == p || i == p - n {
                continue;
            }
            let (x, z) = row.split_at_mut(w);
            let phase =
                product_phase(px, pz, x, z) + 2 * (pivot_neg as u32 + self.negative[i] as u32);
            self.negative[i] = phase & 3 == 2;
            for k in 0..w {
                x[k] ^= px[k];
                z[k] ^= pz[k];
            }
        }
        self.data[(p - n) * stride..(p - n + 1) * stride].copy_from_slice(&pivot);
        self.negative[p - n] = pivot_neg;
        self.scratch = pivot;

        let negative = rng.random::<bool>();
        let row = &mut self.data[p * stride..(p + 1) * stride];
        row.fill(0);
        row[w + word] = 1 << bit;
        self.negative[p] = negative;
        Measurement {
            outcome: Outcome::from_negative(negative),
            deterministic: false,
        }
    }

    /// Checks all commutation relations and full rank. O(n²) row products.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..2 * n {
            for j in (i + 1)..2 * n {
                let anti = anticommutes(self.x(i), self.z(i), self.x(j), self.z(j));
                let expected = j == i + n && i < n;
                if anti != expected {
                    let kind = |r: usize| {
                        if r < n {
                            ("destabilizer", r)
                        } else {
                            ("stabilizer", r - n)
                        }
                    };
                    let (ki, ii) = kind(i);
                    let (kj, jj) = kind(j);
                    return Err(Error::BrokenInvariant(format!(
                        "{ki} {ii} and {kj} {jj} {}",
                        if anti { "anticommute" } else { "commute" }
                    )));
                }
            }
        }
        // The pairing structure above already implies independence; the
        // explicit rank check guards against padding bits leaking in.
        let mut rows: Vec<Vec<u64>> = (0..2 * n)
            .map(|i| self.x(i).iter().chain(self.z(i)).copied().collect())
            .collect();
        let rank = crate::entropy::gf2_rank(&mut rows, 2 * self.w);
        if rank != 2 * n {
            return Err(Error::BrokenInvariant(format!("rank {rank} < {}", 2 * n)));
        }
        let tail = n % 64;
        if tail != 0 {
            let mask = !0u64 << tail;
            if (0..2 * n)
                .any(|i| self.x(i)[self.w - 1] & mask != 0 || self.z(i)[self.w - 1] & mask != 0)
            {
                return Err(Error::BrokenInvariant("bits set beyond qubit count".into()));
            }
        }
        Ok(())
    }

    /// One row per line, destabilizers first, e.g. `+XIZ`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..2 * self.n {
            out.push_str(&self.row(i).to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows: Vec<PauliRow> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect::<Result<_>>()?;
        if !rows.len().is_multiple_of(2) {
            return Err(Error::Parse(format!("odd number of rows ({})", rows.len())));
        }
        let (d, s) = rows.split_at(rows.len() / 2);
        Self::from_rows(d, s)
    }

    /// Single-site Pauli on the stabilizer row `k`; convenience for tests.
    pub fn stabilizer_op(&self, k: usize, site: usize) -> Pauli {
        Pauli::from_bits(
            get_bit(self.stabilizer_x(k), site),
            get_bit(self.stabilizer_z(k), site),
        )
    }
}

impl fmt::Debug for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Tableau(n={})", self.n)?;
        f.write_str(&self.to_text())
    }
}
