//! Subsystem entanglement entropy of stabilizer states.
//!
//! For a pure stabilizer state on `n` qubits and a region `A`,
//! `S_A = rank(G|_A) − |A|` in bits, where `G|_A` is the `n × 2|A|` binary
//! matrix of stabilizer x/z bits restricted to the columns of `A`.

use crate::error::{Error, Result};
use crate::tableau::Tableau;

/// Contiguous interval `[start, start + len)` on a ring of `n` sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    start: usize,
    len: usize,
    n: usize,
}

impl Region {
    pub fn new(start: usize, len: usize, n: usize) -> Result<Self> {
        if n == 0 || start >= n {
            return Err(Error::InvalidRegion(format!(
                "start {start} outside ring of {n} sites"
            )));
        }
        if len == 0 || len >= n {
            return Err(Error::InvalidRegion(format!(
                "length {len} must lie strictly between 0 and {n}"
            )));
        }
        Ok(Region { start, len, n })
    }

    /// `[0, n/2)`. Requires even `n`.
    pub fn half_chain(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidRegion(format!(
                "half chain needs an even site count, got {n}"
            )));
        }
        Self::new(0, n / 2, n)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ring_size(&self) -> usize {
        self.n
    }

    pub fn complement(&self) -> Region {
        Region {
            start: (self.start + self.len) % self.n,
            len: self.n - self.len,
            n: self.n,
        }
    }

    pub fn contains(&self, site: usize) -> bool {
        (site + self.n - self.start) % self.n < self.len
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |k| (self.start + k) % self.n)
    }
}

/// Reads `m ≤ 64` bits starting at bit `pos`.
#[inline]
fn read_bits(src: &[u64], pos: usize, m: usize) -> u64 {
    if m == 0 {
        return 0;
    }
    let (word, off) = (pos >> 6, pos & 63);
    let mut v = src[word] >> off;
    if off + m > 64 {
        v |= src[word + 1] << (64 - off);
    }
    if m < 64 {
        v &= (1u64 << m) - 1;
    }
    v
}

/// Copies `len` bits starting at `start` (wrapping modulo `n`) into the
/// beginning of `dst`.
fn extract_ring_bits(src: &[u64], n: usize, start: usize, len: usize, dst: &mut [u64]) {
    for (k, slot) in dst.iter_mut().enumerate().take(len.div_ceil(64)) {
        let pos = (start + 64 * k) % n;
        let m = (len - 64 * k).min(64);
        *slot = if pos + m <= n {
            read_bits(src, pos, m)
        } else {
            let head = n - pos;
            read_bits(src, pos, head) | (read_bits(src, 0, m - head) << head)
        };
    }
}

/// Rank over GF(2) of the rows, each `words` long. Destroys the input.
pub fn gf2_rank<R: AsMut<[u64]>>(rows: &mut [R], words: usize) -> usize {
    let nrows = rows.len();
    let mut rank = 0;
    for col in 0..64 * words {
        if rank == nrows {
            break;
        }
        let (w, mask) = (col >> 6, 1u64 << (col & 63));
        let Some(pivot) = (rank..nrows).find(|&r| rows[r].as_mut()[w] & mask != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let prow = head[rank].as_mut();
        for row in tail {
            let row = row.as_mut();
            if row[w] & mask != 0 {
                for k in w..words {
                    row[k] ^= prow[k];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of a flat row-major bit matrix (`nrows` rows of `words` words).
pub(crate) fn gf2_rank_flat(buf: &mut [u64], nrows: usize, words: usize) -> usize {
    let mut rank = 0;
    for col in 0..64 * words {
        if rank == nrows {
            break;
        }
        let (w, mask) = (col >> 6, 1u64 << (col & 63));
        let Some(pivot) = (rank..nrows).find(|&r| buf[r * words + w] & mask != 0) else {
            continue;
        };
        if pivot != rank {
            for k in w..words {
                buf.swap(rank * words + k, pivot * words + k);
            }
        }
        let (head, tail) = buf.split_at_mut((rank + 1) * words);
        let prow = &head[rank * words..];
        for row in tail.chunks_exact_mut(words) {
            if row[w] & mask != 0 {
                for k in w..words {
                    row[k] ^= prow[k];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Reusable scratch space for entropy evaluations. One per worker.
#[derive(Default, Debug, Clone)]
pub struct EntropyWorkspace {
    buf: Vec<u64>,
}

impl EntropyWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Entanglement entropy of `region` in bits.
    pub fn entropy(&mut self, state: &Tableau, region: Region) -> Result<u32> {
        let n = state.num_qubits();
        if region.ring_size() != n {
            return Err(Error::InvalidRegion(format!(
                "region defined on {} sites, state has {n}",
                region.ring_size()
            )));
        }
        // Purity makes both sides equivalent; the smaller one is cheaper.
        let region = if region.len() * 2 > n {
            region.complement()
        } else {
            region
        };
        let len = region.len();
        let half = len.div_ceil(64);
        let words = 2 * half;
        self.buf.clear();
        self.buf.resize(n * words, 0);
        for (k, row) in self.buf.chunks_exact_mut(words).enumerate() {
            let (xdst, zdst) = row.split_at_mut(half);
            extract_ring_bits(state.stabilizer_x(k), n, region.start(), len, xdst);
            extract_ring_bits(state.stabilizer_z(k), n, region.start(), len, zdst);
        }
        let rank = gf2_rank_flat(&mut self.buf, n, words);
        debug_assert!(rank >= len);
        Ok((rank - len) as u32)
    }

    pub fn half_chain(&mut self, state: &Tableau) -> Result<u32> {
        self.entropy(state, Region::half_chain(state.num_qubits())?)
    }
}

pub fn entanglement_entropy(state: &Tableau, region: Region) -> Result<u32> {
    EntropyWorkspace::new().entropy(state, region)
}

pub fn half_chain_entropy(state: &Tableau) -> Result<u32> {
    EntropyWorkspace::new().half_chain(state)
}
