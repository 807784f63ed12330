//! Stabilizer-only state in column-major layout, used for trajectories.
//!
//! Trajectories never read measurement outcomes, so the destabilizers can be
//! dropped: the stabilizer rows evolve exactly as in [`Tableau`] under gates
//! and under the random branch of a Z measurement, while a deterministic
//! measurement leaves the state unchanged. Column `c` packs bit `r` = row `r`.

use rand::Rng;

use crate::entropy::{gf2_rank_flat, Region};
use crate::transposed::{apply_gates, SlicedGate};

#[derive(Clone, Debug)]
pub(crate) struct StabilizerColumns {
    n: usize,
    rw: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    sign: Vec<u64>,
    mask: Vec<u64>,
    lo: Vec<u64>,
    hi: Vec<u64>,
    active: Vec<usize>,
    buf: Vec<u64>,
}

impl PartialEq for StabilizerColumns {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z && self.sign == other.sign
    }
}

impl StabilizerColumns {
    /// Stabilizers `Z_k`.
    pub(crate) fn product_state(n: usize) -> Self {
        let rw = n.div_ceil(64);
        let mut s = StabilizerColumns {
            n,
            rw,
            x: vec![0; n * rw],
            z: vec![0; n * rw],
            sign: vec![0; rw],
            mask: vec![0; rw],
            lo: vec![0; rw],
            hi: vec![0; rw],
            active: Vec::with_capacity(rw),
            buf: Vec::new(),
        };
        for k in 0..n {
            s.z[k * rw + (k >> 6)] |= 1 << (k & 63);
        }
        s
    }

    #[cfg(test)]
    pub(crate) fn from_tableau(t: &crate::tableau::Tableau) -> Self {
        let n = t.num_qubits();
        let mut s = Self::product_state(n);
        s.z.fill(0);
        let rw = s.rw;
        for r in 0..n {
            let (xs, zs) = (t.stabilizer_x(r), t.stabilizer_z(r));
            for c in 0..n {
                let bit = 1u64 << (r & 63);
                if (xs[c >> 6] >> (c & 63)) & 1 == 1 {
                    s.x[c * rw + (r >> 6)] |= bit;
                }
                if (zs[c >> 6] >> (c & 63)) & 1 == 1 {
                    s.z[c * rw + (r >> 6)] |= bit;
                }
            }
            if t.stabilizer(r).is_negative() {
                s.sign[r >> 6] |= 1 << (r & 63);
            }
        }
        s
    }

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

    /// Z measurement on `site` without computing a deterministic outcome.
    /// Returns `true` if the outcome was random (one `bool` drawn).
    pub(crate) fn collapse_z<R: Rng + ?Sized>(&mut self, site: usize, rng: &mut R) -> bool {
        let rw = self.rw;
        let col = &self.x[site * rw..(site + 1) * rw];
        let Some(pw) = col.iter().position(|&w| w != 0) else {
            return false;
        };
        let pb = col[pw].trailing_zeros() as usize;

        self.mask.copy_from_slice(col);
        self.mask[pw] &= !(1 << pb);
        self.active.clear();
        self.active.extend((0..rw).filter(|&k| self.mask[k] != 0));
        for &k in &self.active {
            self.lo[k] = 0;
            self.hi[k] = 0;
        }
        // Each other row r with an X on `site` becomes pivot · r. The phase
        // i^g of the product is accumulated per row as a 2-bit counter.
        for c in 0..self.n {
            let base = c * rw;
            let px = (self.x[base + pw] >> pb) & 1 == 1;
            let pz = (self.z[base + pw] >> pb) & 1 == 1;
            if !px && !pz {
                continue;
            }
            for &k in &self.active {
                let m = self.mask[k];
                let (xr, zr) = (self.x[base + k], self.z[base + k]);
                let (plus, minus) = match (px, pz) {
                    (true, false) => (xr & zr, !xr & zr),
                    (true, true) => (!xr & zr, xr & !zr),
                    _ => (xr & !zr, xr & zr),
                };
                let (plus, minus) = (plus & m, minus & m);
                let lo = self.lo[k];
                self.hi[k] ^= (plus & lo) | (minus & !lo);
                self.lo[k] = lo ^ plus ^ minus;
                if px {
                    self.x[base + k] ^= m;
                }
                if pz {
                    self.z[base + k] ^= m;
                }
            }
        }
        let psign = 0u64.wrapping_sub((self.sign[pw] >> pb) & 1);
        for &k in &self.active {
            debug_assert_eq!(self.lo[k], 0, "stabilizers anticommute");
            self.sign[k] ^= (self.hi[k] ^ psign) & self.mask[k];
        }

        let clear = !(1u64 << pb);
        for c in 0..self.n {
            self.x[c * rw + pw] &= clear;
            self.z[c * rw + pw] &= clear;
        }
        self.z[site * rw + pw] |= 1 << pb;
        let negative = rng.random::<bool>();
        self.sign[pw] = (self.sign[pw] & clear) | ((negative as u64) << pb);
        true
    }

    /// Entanglement entropy of `region` in bits.
    pub(crate) fn entropy(&mut self, region: Region) -> u32 {
        debug_assert_eq!(region.ring_size(), self.n);
        let region = if region.len() * 2 > self.n {
            region.complement()
        } else {
            region
        };
        let rw = self.rw;
        let m = region.len();
        self.buf.clear();
        for site in region.sites() {
            self.buf
                .extend_from_slice(&self.x[site * rw..(site + 1) * rw]);
        }
        for site in region.sites() {
            self.buf
                .extend_from_slice(&self.z[site * rw..(site + 1) * rw]);
        }
        let rank = gf2_rank_flat(&mut self.buf, 2 * m, rw);
        (rank - m) as u32
    }
}
