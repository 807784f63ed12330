//! Dense state-vector simulator for small qubit counts.
//!
//! This crate deliberately shares no code with the stabilizer simulator: gates
//! are turned into explicit 4×4 unitaries, measurements are projections of
//! amplitudes, and entropies come from reduced density matrices. It exists to
//! check the tableau implementation in tests.
//!
//! Basis convention: qubit `k` is bit `k` of the amplitude index.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub type Mat4 = [[Complex64; 4]; 4];

/// A signed Pauli string, e.g. `"-XIZY"`; character `k` acts on qubit `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString {
    pub negative: bool,
    pub ops: Vec<char>,
}

impl PauliString {
    pub fn parse(s: &str) -> Self {
        let (negative, body) = match s.as_bytes()[0] {
            b'+' => (false, &s[1..]),
            b'-' => (true, &s[1..]),
            _ => (false, s),
        };
        let ops = body.chars().collect::<Vec<_>>();
        assert!(
            ops.iter().all(|c| "IXYZ".contains(*c)),
            "bad Pauli string {s}"
        );
        PauliString { negative, ops }
    }

    fn apply_to_basis(&self, index: usize) -> (usize, Complex64) {
        let mut out = index;
        let mut coef = if self.negative { -ONE } else { ONE };
        for (q, op) in self.ops.iter().enumerate() {
            let bit = (index >> q) & 1;
            match op {
                'I' => {}
                'X' => out ^= 1 << q,
                'Z' => {
                    if bit == 1 {
                        coef = -coef;
                    }
                }
                'Y' => {
                    out ^= 1 << q;
                    coef *= if bit == 0 { I } else { -I };
                }
                _ => unreachable!(),
            }
        }
        (out, coef)
    }

    /// Dense matrix of the string (small `n` only).
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let dim = 1 << self.ops.len();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for col in 0..dim {
            let (row, c) = self.apply_to_basis(col);
            m[(row, col)] = c;
        }
        m
    }
}

/// Builds the two-qubit unitary (up to global phase) whose conjugation maps
/// `X1, X2, Z1, Z2` to the given images.
///
/// `U|00⟩` is the joint +1 eigenvector of the images of `Z1` and `Z2`, and
/// `U|b1 b2⟩ = U X1^b1 X2^b2 |00⟩ = X1'^b1 X2'^b2 U|00⟩`.
pub fn unitary_from_images(images: [&str; 4]) -> Mat4 {
    let m: Vec<DMatrix<Complex64>> = images
        .iter()
        .map(|s| PauliString::parse(s).matrix())
        .collect();
    let id = DMatrix::<Complex64>::identity(4, 4);
    let half = Complex64::new(0.5, 0.0);
    let proj = (&id + &m[2]) * half * ((&id + &m[3]) * half);
    let col = (0..4)
        .map(|c| proj.column(c).into_owned())
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .unwrap();
    let psi0 = &col / Complex64::new(col.norm(), 0.0);
    let mut u = [[ZERO; 4]; 4];
    for b in 0..4 {
        let mut v = psi0.clone();
        if b & 1 == 1 {
            v = &m[0] * v;
        }
        if b & 2 == 2 {
            v = &m[1] * v;
        }
        for r in 0..4 {
            u[r][b] = v[r];
        }
    }
    u
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

/// `true` if `a = e^{iθ} b` for some θ.
pub fn equal_up_to_phase(a: &Mat4, b: &Mat4, tol: f64) -> bool {
    // Divide at the largest entry of `b`; Clifford entries can all be 1/2.
    let (r, c) = (0..16)
        .map(|k| (k / 4, k % 4))
        .max_by(|&(r1, c1), &(r2, c2)| b[r1][c1].norm().total_cmp(&b[r2][c2].norm()))
        .unwrap();
    if b[r][c].norm() < tol {
        return false;
    }
    let phase = a[r][c] / b[r][c];
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    (0..4).all(|r| (0..4).all(|c| (a[r][c] - phase * b[r][c]).norm() < tol))
}

#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero_state(n: usize) -> Self {
        assert!(
            (1..=16).contains(&n),
            "state vector oracle supports 1..=16 qubits"
        );
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        StateVector { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `u` with its first qubit on site `a` and second on site `b`.
    pub fn apply_two_qubit(&mut self, u: &Mat4, a: usize, b: usize) {
        assert!(a != b && a < self.n && b < self.n);
        let (ma, mb) = (1usize << a, 1usize << b);
        for base in 0..self.amps.len() {
            if base & (ma | mb) != 0 {
                continue;
            }
            let idx = [base, base | ma, base | mb, base | ma | mb];
            let old = idx.map(|i| self.amps[i]);
            for r in 0..4 {
                self.amps[idx[r]] = (0..4).map(|k| u[r][k] * old[k]).sum();
            }
        }
    }

    /// Probability that a Z measurement on `site` yields +1.
    pub fn prob_plus(&self, site: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> site) & 1 == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects onto the given Z eigenvalue of `site` and renormalizes.
    /// Returns the Born probability of that outcome.
    pub fn project(&mut self, site: usize, plus: bool) -> f64 {
        let keep = if plus { 0 } else { 1 };
        let mut prob = 0.0;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i >> site) & 1 == keep {
                prob += a.norm_sqr();
            } else {
                *a = ZERO;
            }
        }
        assert!(
            prob > 1e-12,
            "projection onto an outcome of probability zero"
        );
        let scale = 1.0 / prob.sqrt();
        for a in &mut self.amps {
            *a *= scale;
        }
        prob
    }

    /// ⟨ψ|P|ψ⟩ for a Pauli string on all qubits.
    pub fn expectation(&self, pauli: &PauliString) -> Complex64 {
        assert_eq!(pauli.ops.len(), self.n);
        let mut acc = ZERO;
        for (i, a) in self.amps.iter().enumerate() {
            let (j, c) = pauli.apply_to_basis(i);
            acc += self.amps[j].conj() * c * a;
        }
        acc
    }

    /// Reduced density matrix on `sites` (in the given order).
    pub fn reduced_density_matrix(&self, sites: &[usize]) -> DMatrix<Complex64> {
        let rest: Vec<usize> = (0..self.n).filter(|q| !sites.contains(q)).collect();
        let (da, db) = (1usize << sites.len(), 1usize << rest.len());
        let mut schmidt = DMatrix::from_element(da, db, ZERO);
        for (i, a) in self.amps.iter().enumerate() {
            let ia = sites
                .iter()
                .enumerate()
                .map(|(k, &q)| ((i >> q) & 1) << k)
                .sum::<usize>();
            let ib = rest
                .iter()
                .enumerate()
                .map(|(k, &q)| ((i >> q) & 1) << k)
                .sum::<usize>();
            schmidt[(ia, ib)] = *a;
        }
        &schmidt * schmidt.adjoint()
    }

    /// Von Neumann entropy in bits from the eigenvalues of the reduced
    /// density matrix.
    pub fn von_neumann_entropy(&self, sites: &[usize]) -> f64 {
        // Round-off entries far below any physical weight can drive the
        // eigensolver into subnormal overflow; they are flushed first.
        let rho = self
            .reduced_density_matrix(sites)
            .map(|c| if c.norm() < 1e-13 { ZERO } else { c });
        let eig = SymmetricEigen::new(rho);
        eig.eigenvalues
            .iter()
            .filter(|&&l| l > 1e-12)
            .map(|&l| -l * l.log2())
            .sum()
    }

    /// Rényi-2 entropy in bits, `−log2 Tr ρ²`.
    pub fn renyi2_entropy(&self, sites: &[usize]) -> f64 {
        let rho = self.reduced_density_matrix(sites);
        let purity: f64 = rho.iter().map(|c| c.norm_sqr()).sum();
        -purity.log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conj_check(images: [&str; 4]) {
        let u = unitary_from_images(images);
        let um = DMatrix::from_fn(4, 4, |r, c| u[r][c]);
        let gens = ["XI", "IX", "ZI", "IZ"];
        for (g, img) in gens.iter().zip(images) {
            let lhs = &um * PauliString::parse(g).matrix() * um.adjoint();
            let rhs = PauliString::parse(img).matrix();
            assert!((lhs - rhs).norm() < 1e-10, "{g} -> {img}");
        }
        let uu = &um * um.adjoint();
        assert!((uu - DMatrix::identity(4, 4)).norm() < 1e-10);
    }

    #[test]
    fn builds_unitaries_with_requested_action() {
        conj_check(["XX", "IX", "ZI", "ZZ"]); // CNOT
        conj_check(["ZI", "IX", "XI", "IZ"]); // H on qubit 0
        conj_check(["YI", "IX", "ZI", "IZ"]); // S on qubit 0
        conj_check(["-XI", "IX", "-ZI", "IZ"]); // Y on qubit 0
        conj_check(["IX", "XI", "IZ", "ZI"]); // SWAP
    }

    #[test]
    fn bell_state_entropy_and_measurement() {
        let h = unitary_from_images(["ZI", "IX", "XI", "IZ"]);
        let cnot = unitary_from_images(["XX", "IX", "ZI", "ZZ"]);
        let mut s = StateVector::zero_state(2);
        s.apply_two_qubit(&mat4_mul(&cnot, &h), 0, 1);
        assert!((s.von_neumann_entropy(&[0]) - 1.0).abs() < 1e-10);
        assert!((s.renyi2_entropy(&[1]) - 1.0).abs() < 1e-10);
        assert!((s.prob_plus(0) - 0.5).abs() < 1e-12);
        assert!((s.expectation(&PauliString::parse("XX")).re - 1.0).abs() < 1e-12);
        assert!((s.expectation(&PauliString::parse("-YY")).re - 1.0).abs() < 1e-12);
        s.project(0, false);
        assert!((s.prob_plus(1)).abs() < 1e-12);
        assert!(s.von_neumann_entropy(&[0]).abs() < 1e-10);
    }

    #[test]
    fn gate_on_reversed_sites() {
        let cnot = unitary_from_images(["XX", "IX", "ZI", "ZZ"]);
        let x0 = unitary_from_images(["XI", "IX", "-ZI", "IZ"]);
        let mut s = StateVector::zero_state(3);
        s.apply_two_qubit(&x0, 2, 0); // flips qubit 2
        s.apply_two_qubit(&cnot, 2, 1); // control 2 -> target 1
        assert!((s.amplitudes()[0b110].norm() - 1.0).abs() < 1e-12);
    }
}
