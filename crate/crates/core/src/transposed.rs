//! Column-major copy of a tableau for applying gate layers.
//!
//! In column-major form each qubit owns one packed bit-column of x bits and
//! one of z bits over all `2n` rows, so a two-qubit gate acts on 64 rows per
//! word operation: the symplectic part is a GF(2)-linear map of the four input
//! columns and the sign flip is a Boolean function of them, evaluated from
//! its algebraic normal form.

use std::sync::OnceLock;

use crate::clifford::{CliffordGate2, GateTable, CLIFFORD2_CLASSES};
use crate::tableau::Tableau;

/// A gate prepared for the bit-sliced kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct SlicedGate {
    /// `linear[i]` is the set of input bits (x_a, x_b, z_a, z_b) XORed into
    /// output bit `i`.
    linear: [u8; 4],
    /// Bit `m` set iff the monomial `∏_{j ∈ m} v_j` appears in the sign flip.
    anf: u16,
}

impl SlicedGate {
    pub(crate) fn new(table: &GateTable) -> Self {
        let mut linear = [0u8; 4];
        for j in 0..4 {
            let (img, _) = table.image(1 << j);
            for (i, lin) in linear.iter_mut().enumerate() {
                *lin |= ((img >> i) & 1) << j;
            }
        }
        // Möbius transform of the sign table.
        let mut coef = [0u8; 16];
        for (v, c) in coef.iter_mut().enumerate() {
            *c = table.image(v as u8).1 as u8;
        }
        for bit in 0..4 {
            for m in 0..16 {
                if m & (1 << bit) != 0 {
                    coef[m] ^= coef[m ^ (1 << bit)];
                }
            }
        }
        let anf = coef
            .iter()
            .enumerate()
            .fold(0u16, |acc, (m, &c)| acc | ((c as u16) << m));
        SlicedGate { linear, anf }
    }
}

/// `SlicedGate` of every Clifford class, by [`CliffordGate2::index`].
pub(crate) fn sliced_gates() -> &'static [SlicedGate] {
    static TABLE: OnceLock<Vec<SlicedGate>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..CLIFFORD2_CLASSES)
            .map(|i| SlicedGate::new(&CliffordGate2::from_index(i).table()))
            .collect()
    })
}

/// Transposes a 64×64 bit block in place: afterwards bit `c` of `a[r]`
/// holds what was bit `r` of `a[c]`.
pub(crate) fn transpose64(a: &mut [u64; 64]) {
    const MASKS: [(usize, u64); 6] = [
        (32, 0x0000_0000_FFFF_FFFF),
        (16, 0x0000_FFFF_0000_FFFF),
        (8, 0x00FF_00FF_00FF_00FF),
        (4, 0x0F0F_0F0F_0F0F_0F0F),
        (2, 0x3333_3333_3333_3333),
        (1, 0x5555_5555_5555_5555),
    ];
    for (j, m) in MASKS {
        for k in 0..64 {
            if k & j == 0 {
                let t = ((a[k] >> j) ^ a[k + j]) & m;
                a[k + j] ^= t;
                a[k] ^= t << j;
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct TransposedTableau {
    n: usize,
    /// Words per column (covers `2n` rows).
    rw: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    sign: Vec<u64>,
}

impl TransposedTableau {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// Copies `t` into column-major form.
    pub(crate) fn load(&mut self, t: &Tableau) {
        let n = t.n;
        let rows = 2 * n;
        self.n = n;
        self.rw = rows.div_ceil(64);
        let rw = self.rw;
        self.x.clear();
        self.x.resize(n * rw, 0);
        self.z.clear();
        self.z.resize(n * rw, 0);
        self.sign.clear();
        self.sign.resize(rw, 0);
        for (r, &neg) in t.negative.iter().enumerate() {
            self.sign[r >> 6] |= (neg as u64) << (r & 63);
        }
        let stride = 2 * t.w;
        let mut blk = [0u64; 64];
        for half in 0..2 {
            let offset = half * t.w;
            let cols = if half == 0 { &mut self.x } else { &mut self.z };
            for rb in 0..rw {
                for cb in 0..t.w {
                    for (k, slot) in blk.iter_mut().enumerate() {
                        let r = 64 * rb + k;
                        *slot = if r < rows {
                            t.data[r * stride + offset + cb]
                        } else {
                            0
                        };
                    }
                    transpose64(&mut blk);
                    for (k, &word) in blk.iter().enumerate() {
                        let c = 64 * cb + k;
                        if c < n {
                            cols[c * rw + rb] = word;
                        }
                    }
                }
            }
        }
    }

    /// Writes the column-major contents back into `t` (same qubit count).
    pub(crate) fn store(&self, t: &mut Tableau) {
        let n = self.n;
        debug_assert_eq!(t.n, n);
        let rows = 2 * n;
        let rw = self.rw;
        let stride = 2 * t.w;
        for (r, neg) in t.negative.iter_mut().enumerate() {
            *neg = (self.sign[r >> 6] >> (r & 63)) & 1 == 1;
        }
        let mut blk = [0u64; 64];
        for half in 0..2 {
            let offset = half * t.w;
            let cols = if half == 0 { &self.x } else { &self.z };
            for cb in 0..t.w {
                for rb in 0..rw {
                    for (k, slot) in blk.iter_mut().enumerate() {
                        let c = 64 * cb + k;
                        *slot = if c < n { cols[c * rw + rb] } else { 0 };
                    }
                    transpose64(&mut blk);
                    for (k, &word) in blk.iter().enumerate() {
                        let r = 64 * rb + k;
                        if r < rows {
                            t.data[r * stride + offset + cb] = word;
                        }
                    }
                }
            }
        }
    }

    /// Applies gates on pairwise disjoint site pairs; `gates[k]` acts on
    /// `pairs[k]` with the first site as the gate's first qubit.
    pub(crate) fn apply(&mut self, pairs: &[(usize, usize)], gates: &[SlicedGate]) {
        apply_gates(
            &mut self.x,
            &mut self.z,
            &mut self.sign,
            self.rw,
            pairs,
            gates,
        );
    }
}

/// Gate kernel on column-major storage with `rw` words per column.
pub(crate) fn apply_gates(
    x: &mut [u64],
    z: &mut [u64],
    sign: &mut [u64],
    rw: usize,
    pairs: &[(usize, usize)],
    gates: &[SlicedGate],
) {
    debug_assert_eq!(pairs.len(), gates.len());
    for (&(a, b), gate) in pairs.iter().zip(gates) {
        let (xa, xb) = two_columns(x, rw, a, b);
        let (za, zb) = two_columns(z, rw, a, b);
        let lin = gate
            .linear
            .map(|m| [0, 1, 2, 3].map(|j| 0u64.wrapping_sub(((m >> j) & 1) as u64)));
        let anf = gate.anf;
        for r in 0..rw {
            let v = [xa[r], xb[r], za[r], zb[r]];
            let mut prod = [!0u64; 16];
            for m in 1..16usize {
                let low = m.trailing_zeros() as usize;
                prod[m] = prod[m & (m - 1)] & v[low];
            }
            let mut flip = 0u64;
            for (m, p) in prod.iter().enumerate().skip(1) {
                flip ^= p & 0u64.wrapping_sub(((anf >> m) & 1) as u64);
            }
            let out = lin
                .map(|sel| (v[0] & sel[0]) ^ (v[1] & sel[1]) ^ (v[2] & sel[2]) ^ (v[3] & sel[3]));
            xa[r] = out[0];
            xb[r] = out[1];
            za[r] = out[2];
            zb[r] = out[3];
            sign[r] ^= flip;
        }
    }
}

/// Disjoint mutable views of columns `a` and `b`.
fn two_columns(cols: &mut [u64], rw: usize, a: usize, b: usize) -> (&mut [u64], &mut [u64]) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = cols.split_at_mut(b * rw);
        (&mut lo[a * rw..(a + 1) * rw], &mut hi[..rw])
    } else {
        let (lo, hi) = cols.split_at_mut(a * rw);
        let (b_col, a_col) = (&mut lo[b * rw..(b + 1) * rw], &mut hi[..rw]);
        (a_col, b_col)
    }
}
