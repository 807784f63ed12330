//! Bit-packed Pauli strings.
//!
//! A Pauli on `n` qubits is stored as two packed bit-vectors `x` and `z` and a
//! sign bit. The pair `(x_j, z_j)` encodes the single-qubit factor on site `j`:
//! `(0,0)=I`, `(1,0)=X`, `(1,1)=Y`, `(0,1)=Z`. Every row is Hermitian, so the
//! sign is `+1` or `-1`; the `i` factors that appear when two rows are
//! multiplied are tracked mod 4 only for the duration of the product.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
pub(crate) fn get_bit(words: &[u64], i: usize) -> bool {
    (words[i >> 6] >> (i & 63)) & 1 == 1
}

#[inline]
pub(crate) fn set_bit(words: &mut [u64], i: usize, value: bool) {
    let mask = 1u64 << (i & 63);
    if value {
        words[i >> 6] |= mask;
    } else {
        words[i >> 6] &= !mask;
    }
}

/// Exponent of `i` (mod 4) picked up by the product `left * right` of two
/// Hermitian Pauli strings, ignoring their signs.
#[inline]
pub(crate) fn product_phase(lx: &[u64], lz: &[u64], rx: &[u64], rz: &[u64]) -> u32 {
    let mut plus = 0u32;
    let mut minus = 0u32;
    for k in 0..lx.len() {
        let (x1, z1, x2, z2) = (lx[k], lz[k], rx[k], rz[k]);
        let ly = x1 & z1;
        let lxo = x1 & !z1;
        let lzo = z1 & !x1;
        let ry = x2 & z2;
        let rxo = x2 & !z2;
        let rzo = z2 & !x2;
        plus += ((ly & rzo) | (lxo & ry) | (lzo & rxo)).count_ones();
        minus += ((ly & rxo) | (lxo & rzo) | (lzo & ry)).count_ones();
    }
    plus.wrapping_sub(minus) & 3
}

/// Symplectic inner product: `true` iff the two strings anticommute.
#[inline]
pub(crate) fn anticommutes(ax: &[u64], az: &[u64], bx: &[u64], bz: &[u64]) -> bool {
    let mut acc = 0u64;
    for k in 0..ax.len() {
        acc ^= (ax[k] & bz[k]) ^ (az[k] & bx[k]);
    }
    acc.count_ones() & 1 == 1
}

/// Single-qubit Pauli factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A signed Hermitian Pauli string on `n` qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliRow {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    negative: bool,
}

impl PauliRow {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        PauliRow {
            n,
            x: vec![0; w],
            z: vec![0; w],
            negative: false,
        }
    }

    pub(crate) fn from_parts(n: usize, x: &[u64], z: &[u64], negative: bool) -> Self {
        PauliRow {
            n,
            x: x.to_vec(),
            z: z.to_vec(),
            negative,
        }
    }

    /// Single-site operator `op` on `site`, identity elsewhere.
    pub fn single(n: usize, site: usize, op: Pauli) -> Self {
        let mut row = Self::identity(n);
        row.set(site, op);
        row
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x_bits(&self) -> &[u64] {
        &self.x
    }

    pub fn z_bits(&self) -> &[u64] {
        &self.z
    }

    /// `true` for sign −1.
    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn set_negative(&mut self, negative: bool) {
        self.negative = negative;
    }

    pub fn get(&self, site: usize) -> Pauli {
        Pauli::from_bits(get_bit(&self.x, site), get_bit(&self.z, site))
    }

    pub fn set(&mut self, site: usize, op: Pauli) {
        let (x, z) = op.bits();
        set_bit(&mut self.x, site, x);
        set_bit(&mut self.z, site, z);
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn commutes_with(&self, other: &PauliRow) -> bool {
        !anticommutes(&self.x, &self.z, &other.x, &other.z)
    }

    /// Replace `self` by `left * self`. Both operands must commute, otherwise
    /// the product is not Hermitian and an error is returned.
    pub fn left_mul_assign(&mut self, left: &PauliRow) -> Result<()> {
        let phase = product_phase(&left.x, &left.z, &self.x, &self.z)
            + 2 * (self.negative as u32 + left.negative as u32);
        if phase & 1 == 1 {
            return Err(Error::BrokenInvariant(
                "product of anticommuting Paulis is not Hermitian".into(),
            ));
        }
        self.negative = phase & 3 == 2;
        for k in 0..self.x.len() {
            self.x[k] ^= left.x[k];
            self.z[k] ^= left.z[k];
        }
        Ok(())
    }
}

impl fmt::Display for PauliRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.negative { '-' } else { '+' })?;
        for site in 0..self.n {
            write!(f, "{}", self.get(site).symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliRow {
    type Err = Error;

    /// Parses strings such as `+XIZY`, `-ZZ` or `XX` (sign defaults to `+`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (negative, body) = match s.as_bytes().first() {
            Some(b'+') => (false, &s[1..]),
            Some(b'-') => (true, &s[1..]),
            _ => (false, s),
        };
        if body.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string `{s}`")));
        }
        let mut row = PauliRow::identity(body.len());
        row.negative = negative;
        for (site, c) in body.chars().enumerate() {
            let op = match c {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::Parse(format!(
                        "unexpected character `{other}` in `{s}`"
                    )))
                }
            };
            row.set(site, op);
        }
        Ok(row)
    }
}
