//! Two-qubit Clifford gates and uniform sampling from the two-qubit Clifford
//! group (modulo global phase).
//!
//! A two-qubit Pauli is a 4-bit vector `(x1, x2, z1, z2)` stored in bits 0..4
//! of a `u8`. A gate is described by the images of the four generators
//! `X1, X2, Z1, Z2`: the image vectors form the columns of a 4×4 binary
//! symplectic matrix and one sign bit per generator records the phase.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// |Sp(4, 2)|.
pub const SYMPLECTIC_GROUP_ORDER: usize = 720;

/// Number of two-qubit Clifford classes modulo global phase: 720 · 16.
pub const CLIFFORD2_CLASSES: usize = SYMPLECTIC_GROUP_ORDER * 16;

const X1: u8 = 0b0001;
const X2: u8 = 0b0010;
const Z1: u8 = 0b0100;
const Z2: u8 = 0b1000;

#[inline]
fn x_part(v: u8) -> u8 {
    v & 0b11
}

#[inline]
fn z_part(v: u8) -> u8 {
    (v >> 2) & 0b11
}

/// Symplectic form on two-qubit Pauli vectors; 1 iff they anticommute.
#[inline]
pub fn symplectic_form(u: u8, v: u8) -> u8 {
    (((x_part(u) & z_part(v)) ^ (z_part(u) & x_part(v))).count_ones() & 1) as u8
}

/// Lookup table for conjugating a two-qubit Pauli by a gate: entry `v` holds
/// the image vector in bits 0..4 and the sign flip in bit 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateTable(pub(crate) [u8; 16]);

impl GateTable {
    #[inline]
    pub fn image(&self, v: u8) -> (u8, bool) {
        let e = self.0[(v & 15) as usize];
        (e & 15, e >> 4 == 1)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CliffordGate2 {
    columns: [u8; 4],
    phases: u8,
}

impl CliffordGate2 {
    /// Builds a gate from generator images (`columns[j]` is the image of
    /// generator `j` in the order `X1, X2, Z1, Z2`) and sign bits.
    pub fn new(columns: [u8; 4], phases: u8) -> Result<Self> {
        let gate = CliffordGate2 {
            columns: columns.map(|c| c & 15),
            phases: phases & 15,
        };
        if columns.iter().any(|&c| c > 15) || !gate.is_symplectic() || !gate.is_invertible() {
            return Err(Error::NotSymplectic);
        }
        Ok(gate)
    }

    /// Unchecked construction, used by tests that need malformed gates.
    #[doc(hidden)]
    pub fn new_unchecked(columns: [u8; 4], phases: u8) -> Self {
        CliffordGate2 { columns, phases }
    }

    pub fn identity() -> Self {
        CliffordGate2 {
            columns: [X1, X2, Z1, Z2],
            phases: 0,
        }
    }

    /// CNOT with control on the first qubit.
    pub fn cnot() -> Self {
        CliffordGate2 {
            columns: [X1 | X2, X2, Z1, Z1 | Z2],
            phases: 0,
        }
    }

    pub fn cz() -> Self {
        CliffordGate2 {
            columns: [X1 | Z2, X2 | Z1, Z1, Z2],
            phases: 0,
        }
    }

    pub fn swap() -> Self {
        CliffordGate2 {
            columns: [X2, X1, Z2, Z1],
            phases: 0,
        }
    }

    /// Hadamard on qubit `q` (0 or 1 within the pair).
    pub fn hadamard(q: usize) -> Self {
        match q {
            0 => CliffordGate2 {
                columns: [Z1, X2, X1, Z2],
                phases: 0,
            },
            _ => CliffordGate2 {
                columns: [X1, Z2, Z1, X2],
                phases: 0,
            },
        }
    }

    /// Phase gate `S = diag(1, i)` on qubit `q`.
    pub fn phase(q: usize) -> Self {
        match q {
            0 => CliffordGate2 {
                columns: [X1 | Z1, X2, Z1, Z2],
                phases: 0,
            },
            _ => CliffordGate2 {
                columns: [X1, X2 | Z2, Z1, Z2],
                phases: 0,
            },
        }
    }

    /// Pauli `X` on qubit `q`: flips the sign of the `Z` (and `Y`) images.
    pub fn pauli_x(q: usize) -> Self {
        CliffordGate2 {
            columns: [X1, X2, Z1, Z2],
            phases: if q == 0 { 0b0100 } else { 0b1000 },
        }
    }

    /// Generator images in the order `X1, X2, Z1, Z2`.
    pub fn columns(&self) -> [u8; 4] {
        self.columns
    }

    pub fn phase_bits(&self) -> u8 {
        self.phases
    }

    /// The symplectic matrix, `m[row][col]`, acting on column vectors
    /// `(x1, x2, z1, z2)`.
    pub fn symplectic_matrix(&self) -> [[u8; 4]; 4] {
        let mut m = [[0u8; 4]; 4];
        for (col, &c) in self.columns.iter().enumerate() {
            for (row, r) in m.iter_mut().enumerate() {
                r[col] = (c >> row) & 1;
            }
        }
        m
    }

    /// Image of the Pauli vector `v` under the symplectic part only.
    #[inline]
    pub fn map_vector(&self, v: u8) -> u8 {
        let mut out = 0;
        for j in 0..4 {
            if (v >> j) & 1 == 1 {
                out ^= self.columns[j];
            }
        }
        out
    }

    /// Checks `Sᵀ Λ S = Λ` column pair by column pair.
    pub fn is_symplectic(&self) -> bool {
        (0..4).all(|i| {
            (0..4).all(|j| {
                symplectic_form(self.columns[i], self.columns[j]) == symplectic_form(1 << i, 1 << j)
            })
        })
    }

    /// Rank-4 check by elimination over GF(2).
    pub fn is_invertible(&self) -> bool {
        let mut rows = self.columns;
        let mut rank = 0;
        for bit in 0..4 {
            let Some(pivot) = (rank..4).find(|&r| (rows[r] >> bit) & 1 == 1) else {
                continue;
            };
            rows.swap(rank, pivot);
            for r in 0..4 {
                if r != rank && (rows[r] >> bit) & 1 == 1 {
                    rows[r] ^= rows[rank];
                }
            }
            rank += 1;
        }
        rank == 4
    }

    /// Conjugation table for all 16 two-qubit Paulis, with signs.
    pub fn table(&self) -> GateTable {
        // Products are carried as i^k X^x Z^z with all X factors to the left.
        let mul = |(k1, v1): (u8, u8), (k2, v2): (u8, u8)| -> (u8, u8) {
            let swap = (z_part(v1) & x_part(v2)).count_ones() as u8;
            ((k1 + k2 + 2 * swap) & 3, v1 ^ v2)
        };
        let ys = |v: u8| (x_part(v) & z_part(v)).count_ones() as u8;
        let mut entries = [0u8; 16];
        for v in 0..16u8 {
            let mut acc = (ys(v) & 3, 0u8);
            for j in 0..4 {
                if (v >> j) & 1 == 1 {
                    let c = self.columns[j];
                    let sign = (self.phases >> j) & 1;
                    acc = mul(acc, ((2 * sign + ys(c)) & 3, c));
                }
            }
            let k = (acc.0 + 4 - (ys(acc.1) & 3)) & 3;
            debug_assert!(k & 1 == 0, "non-Hermitian image for a symplectic gate");
            entries[v as usize] = acc.1 | ((k >> 1) << 4);
        }
        GateTable(entries)
    }

    /// Image of a two-qubit Pauli vector with its sign flip.
    pub fn image(&self, v: u8) -> (u8, bool) {
        self.table().image(v)
    }

    /// The gate equal to applying `self` first and then `then`.
    pub fn compose(&self, then: &CliffordGate2) -> CliffordGate2 {
        let t = then.table();
        let mut columns = [0u8; 4];
        let mut phases = 0u8;
        for j in 0..4 {
            let (img, flip) = t.image(self.columns[j]);
            columns[j] = img;
            phases |= ((((self.phases >> j) & 1) ^ flip as u8) & 1) << j;
        }
        CliffordGate2 { columns, phases }
    }

    pub fn inverse(&self) -> CliffordGate2 {
        let mut columns = [0u8; 4];
        for (j, col) in columns.iter_mut().enumerate() {
            *col = (0..16u8)
                .find(|&u| self.map_vector(u) == 1 << j)
                .expect("gate is invertible");
        }
        (0..16u8)
            .map(|phases| CliffordGate2 { columns, phases })
            .find(|inv| self.compose(inv) == CliffordGate2::identity())
            .expect("every Clifford has an inverse")
    }

    /// Decodes an index in `0..CLIFFORD2_CLASSES` into a gate. The index
    /// enumerates every class exactly once: the low four bits are the sign
    /// bits and the remainder picks a symplectic matrix via
    /// [`CliffordGate2::from_symplectic_index`].
    pub fn from_index(index: usize) -> Self {
        assert!(
            index < CLIFFORD2_CLASSES,
            "Clifford index {index} out of range"
        );
        let mut gate = Self::from_symplectic_index(index / 16);
        gate.phases = (index % 16) as u8;
        gate
    }

    pub fn index(&self) -> usize {
        self.symplectic_index() * 16 + self.phases as usize
    }

    /// Canonical construction of the `index`-th element of Sp(4, 2): image of
    /// `X1` among the 15 nonidentity Paulis, image of `Z1` among the 8 Paulis
    /// anticommuting with it, then a symplectic pair in the 2-dimensional
    /// complement (3 · 2 choices).
    pub fn from_symplectic_index(index: usize) -> Self {
        assert!(
            index < SYMPLECTIC_GROUP_ORDER,
            "symplectic index {index} out of range"
        );
        let [i1, i2, i3, i4] = mixed_radix(index);
        let x1 = i1 as u8 + 1;
        let z1 = anticommuting(x1)[i2];
        let comp = complement(x1, z1);
        let x2 = comp[i3];
        let z2 = comp
            .iter()
            .copied()
            .filter(|&v| symplectic_form(v, x2) == 1)
            .nth(i4)
            .expect("2 partners");
        CliffordGate2 {
            columns: [x1, x2, z1, z2],
            phases: 0,
        }
    }

    pub fn symplectic_index(&self) -> usize {
        let [x1, x2, z1, z2] = self.columns;
        let i1 = (x1 - 1) as usize;
        let i2 = anticommuting(x1)
            .iter()
            .position(|&v| v == z1)
            .expect("symplectic gate");
        let comp = complement(x1, z1);
        let i3 = comp.iter().position(|&v| v == x2).expect("symplectic gate");
        let i4 = comp
            .iter()
            .copied()
            .filter(|&v| symplectic_form(v, x2) == 1)
            .position(|v| v == z2)
            .expect("symplectic gate");
        i1 + 15 * (i2 + 8 * (i3 + 3 * i4))
    }
}

fn mixed_radix(mut index: usize) -> [usize; 4] {
    let mut digits = [0; 4];
    for (d, radix) in digits.iter_mut().zip([15, 8, 3, 2]) {
        *d = index % radix;
        index /= radix;
    }
    digits
}

fn anticommuting(v: u8) -> [u8; 8] {
    let mut out = [0u8; 8];
    for (slot, u) in out
        .iter_mut()
        .zip((1..16u8).filter(|&u| symplectic_form(u, v) == 1))
    {
        *slot = u;
    }
    out
}

fn complement(a: u8, b: u8) -> [u8; 3] {
    let mut out = [0u8; 3];
    let iter = (1..16u8).filter(|&u| symplectic_form(u, a) == 0 && symplectic_form(u, b) == 0);
    for (slot, u) in out.iter_mut().zip(iter) {
        *slot = u;
    }
    out
}

impl fmt::Debug for CliffordGate2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["X1", "X2", "Z1", "Z2"];
        let mut list = f.debug_map();
        for (j, name) in names.iter().enumerate() {
            let sign = if (self.phases >> j) & 1 == 1 {
                '-'
            } else {
                '+'
            };
            list.entry(
                name,
                &format_args!("{sign}{}", pauli2_label(self.columns[j])),
            );
        }
        list.finish()
    }
}

/// Two-character label (`XI`, `ZY`, ...) for a two-qubit Pauli vector.
pub fn pauli2_label(v: u8) -> String {
    let c = |x: u8, z: u8| match (x, z) {
        (0, 0) => 'I',
        (1, 0) => 'X',
        (1, 1) => 'Y',
        _ => 'Z',
    };
    [c(v & 1, (v >> 2) & 1), c((v >> 1) & 1, (v >> 3) & 1)]
        .iter()
        .collect()
}

/// Uniform sample from the two-qubit Clifford group modulo global phase.
/// Consumes exactly one bounded integer draw from `rng`.
pub fn sample_clifford2<R: Rng + ?Sized>(rng: &mut R) -> CliffordGate2 {
    CliffordGate2::from_index(rng.random_range(0..CLIFFORD2_CLASSES))
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn enumeration_covers_group_exactly_once() {
        let matrices: HashSet<[u8; 4]> = (0..SYMPLECTIC_GROUP_ORDER)
            .map(|i| CliffordGate2::from_symplectic_index(i).columns())
            .collect();
        assert_eq!(matrices.len(), 720);

        let classes: HashSet<CliffordGate2> = (0..CLIFFORD2_CLASSES)
            .map(CliffordGate2::from_index)
            .collect();
        assert_eq!(classes.len(), 11520);
        for g in &classes {
            assert!(g.is_symplectic() && g.is_invertible());
        }
    }

    #[test]
    fn index_round_trip() {
        for i in (0..CLIFFORD2_CLASSES).step_by(7) {
            assert_eq!(CliffordGate2::from_index(i).index(), i);
        }
    }

    #[test]
    fn symplectic_matrix_satisfies_metric_identity() {
        // Sᵀ Λ S = Λ, written out with explicit matrix products.
        let lambda = [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]];
        for i in (0..SYMPLECTIC_GROUP_ORDER).step_by(11) {
            let s = CliffordGate2::from_symplectic_index(i).symplectic_matrix();
            let mut out = [[0u8; 4]; 4];
            for (r, row) in out.iter_mut().enumerate() {
                for (c, cell) in row.iter_mut().enumerate() {
                    let mut acc = 0;
                    for a in 0..4 {
                        for b in 0..4 {
                            acc ^= s[a][r] & lambda[a][b] & s[b][c];
                        }
                    }
                    *cell = acc;
                }
            }
            assert_eq!(out, lambda);
        }
    }

    #[test]
    fn rejects_non_symplectic() {
        assert!(CliffordGate2::new([X1, X2, Z1, Z1], 0).is_err());
        assert!(CliffordGate2::new([X1, X2, X2, Z2], 0).is_err());
        assert!(CliffordGate2::new([X1, X2, Z1, Z2], 3).is_ok());
    }

    #[test]
    fn named_gate_images() {
        let cnot = CliffordGate2::cnot();
        // Y1 = (x1,z1) -> Y1 X2
        assert_eq!(cnot.image(X1 | Z1), (X1 | Z1 | X2, false));
        // X1 Z2 -> X1 X2 Z1 Z2 = (XZ)(XZ) up to sign: Y Y with sign -1
        assert_eq!(cnot.image(X1 | Z2), (X1 | X2 | Z1 | Z2, true));
        let s = CliffordGate2::phase(0);
        assert_eq!(s.image(X1 | Z1), (X1, true)); // S Y S† = -X
        let h = CliffordGate2::hadamard(0);
        assert_eq!(h.image(X1 | Z1), (X1 | Z1, true)); // H Y H = -Y
        for g in [
            cnot,
            s,
            h,
            CliffordGate2::cz(),
            CliffordGate2::swap(),
            CliffordGate2::pauli_x(1),
        ] {
            assert!(g.is_symplectic());
        }
    }

    #[test]
    fn compose_identity_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let id = CliffordGate2::identity();
        for _ in 0..500 {
            let g = sample_clifford2(&mut rng);
            assert_eq!(g.compose(&id), g);
            assert_eq!(id.compose(&g), g);
            assert_eq!(g.compose(&g.inverse()), id);
            assert_eq!(g.inverse().compose(&g), id);
            let h = sample_clifford2(&mut rng);
            let gh = g.compose(&h);
            assert!(gh.is_symplectic());
            // tables compose pointwise
            for v in 0..16u8 {
                let (a, fa) = g.image(v);
                let (b, fb) = h.image(a);
                assert_eq!(gh.image(v), (b, fa ^ fb));
            }
        }
    }

    #[test]
    fn x1_image_is_uniform_over_nonidentity_paulis() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 150_000;
        let mut counts = [0usize; 16];
        for _ in 0..n {
            counts[sample_clifford2(&mut rng).columns()[0] as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        let expected = n as f64 / 15.0;
        let chi2: f64 = counts[1..]
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 14 dof, 0.999 quantile ≈ 36.1
        assert!(chi2 < 36.1, "chi2 = {chi2}");
    }
}
