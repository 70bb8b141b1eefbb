//! Dense statevector reference simulator for small registers.
//!
//! Basis index bit `q` holds the state of qubit `q`. Multi-qubit gate
//! matrices index their local basis with the first listed qubit as the most
//! significant bit, matching [`crate::stabilizer::Clifford2::unitary`].

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { got: n, max: MAX_QUBITS });
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Apply a `2^k x 2^k` unitary to `qubits` (k = 1 or 2).
    pub fn apply_gate(&mut self, u: &DMatrix<Complex64>, qubits: &[usize]) -> Result<&mut Self> {
        let dim = 1usize << qubits.len();
        if qubits.is_empty() || qubits.len() > 2 || u.nrows() != dim || u.ncols() != dim {
            return Err(Error::BadGateShape { got: u.nrows(), expected: dim });
        }
        for &q in qubits {
            if q >= self.n {
                return Err(Error::QubitOutOfRange { qubit: q, n: self.n });
            }
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::SameQubit(qubits[0]));
        }
        let dev = (u.adjoint() * u - DMatrix::identity(dim, dim)).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
        let mask: usize = qubits.iter().map(|&q| 1 << q).sum();
        let spread = |l: usize| {
            qubits.iter().enumerate().fold(0, |acc, (i, &q)| acc | (((l >> (qubits.len() - 1 - i)) & 1) << q))
        };
        let mut buf = vec![ZERO; dim];
        for base in (0..self.amps.len()).filter(|i| i & mask == 0) {
            for (l, b) in buf.iter_mut().enumerate() {
                *b = self.amps[base | spread(l)];
            }
            for r in 0..dim {
                self.amps[base | spread(r)] = (0..dim).map(|c| u[(r, c)] * buf[c]).sum();
            }
        }
        Ok(self)
    }

    /// Probability that measuring `Z_q` gives `+1`.
    pub fn prob_plus(&self, q: usize) -> f64 {
        self.amps.iter().enumerate().filter(|(i, _)| (i >> q) & 1 == 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Born-rule Z measurement; `forced` replays a recorded outcome.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, forced: Option<i8>, rng: &mut R) -> Result<i8> {
        if q >= self.n {
            return Err(Error::QubitOutOfRange { qubit: q, n: self.n });
        }
        let p_plus = self.prob_plus(q);
        let outcome = match forced {
            Some(o) => o,
            None if rng.gen::<f64>() < p_plus => 1,
            None => -1,
        };
        let p = if outcome == 1 { p_plus } else { 1.0 - p_plus };
        if p < 1e-12 {
            return Err(Error::ImpossibleOutcome);
        }
        let keep = usize::from(outcome != 1);
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a = if (i >> q) & 1 == keep { *a * scale } else { ZERO };
        }
        Ok(outcome)
    }

    /// Reduced density matrix on `region` (sorted or not; row index bits
    /// follow the order of `region`, first qubit most significant).
    pub fn reduced_density_matrix(&self, region: &[usize]) -> DMatrix<Complex64> {
        let k = region.len();
        let env: Vec<usize> = (0..self.n).filter(|q| !region.contains(q)).collect();
        let da = 1usize << k;
        let de = 1usize << env.len();
        let index = |a: usize, e: usize| {
            let mut i = 0;
            for (j, &q) in region.iter().enumerate() {
                i |= ((a >> (k - 1 - j)) & 1) << q;
            }
            for (j, &q) in env.iter().enumerate() {
                i |= ((e >> j) & 1) << q;
            }
            i
        };
        let psi = DMatrix::from_fn(da, de, |a, e| self.amps[index(a, e)]);
        &psi * psi.adjoint()
    }

    fn smaller_side(&self, region: &[usize]) -> Vec<usize> {
        if 2 * region.len() > self.n {
            (0..self.n).filter(|q| !region.contains(q)).collect()
        } else {
            region.to_vec()
        }
    }

    /// Von Neumann entropy of `region` in nats.
    pub fn entropy(&self, region: &[usize]) -> f64 {
        let side = self.smaller_side(region);
        if side.is_empty() {
            return 0.0;
        }
        let eig = SymmetricEigen::new(self.reduced_density_matrix(&side));
        eig.eigenvalues.iter().filter(|&&l| l > 1e-12).map(|&l| -l * l.ln()).sum()
    }

    /// Second Renyi entropy of `region` in nats.
    pub fn renyi2(&self, region: &[usize]) -> f64 {
        let side = self.smaller_side(region);
        if side.is_empty() {
            return 0.0;
        }
        let rho = self.reduced_density_matrix(&side);
        let purity = (&rho * &rho).trace().re;
        -purity.ln()
    }

    /// `<psi| P |psi>` for the Hermitian Pauli string with X bits `x` and Z
    /// bits `z` (both set means `Y`).
    pub fn pauli_expectation(&self, x: &[bool], z: &[bool]) -> f64 {
        let flip: usize = x.iter().enumerate().filter(|(_, &b)| b).map(|(q, _)| 1 << q).sum();
        let mut total = ZERO;
        for (i, a) in self.amps.iter().enumerate() {
            // P|i> = phase * |i ^ flip>, with Y|b> = i(-1)^b |1-b>
            let mut ph = ONE;
            for q in 0..self.n {
                let b = (i >> q) & 1 == 1;
                match (x[q], z[q]) {
                    (false, true) | (true, true) if b => ph = -ph,
                    _ => {}
                }
                if x[q] && z[q] {
                    ph *= Complex64::new(0.0, 1.0);
                }
            }
            total += self.amps[i ^ flip].conj() * ph * a;
        }
        total.re
    }
}

pub fn h() -> DMatrix<Complex64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

pub fn phase() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, Complex64::new(0.0, 1.0)])
}

pub fn cz() -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE]))
}

pub fn cnot() -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn from_array4(u: &[[Complex64; 4]; 4]) -> DMatrix<Complex64> {
    DMatrix::from_fn(4, 4, |r, c| u[r][c])
}
