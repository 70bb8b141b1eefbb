//! The two-qubit Clifford group modulo phase (11520 elements).
//!
//! Elements are indexed as `symplectic * 16 + pauli`: one of the 720
//! symplectic classes, each realized by a fixed shortest word in
//! `{H, P, CNOT}`, followed by one of 16 Pauli frames. Each element is
//! stored as a lookup table giving the image of every two-qubit Pauli.
//!
//! Pauli keys pack `(x_a, z_a, x_b, z_b)` into bits 0..4.

use std::collections::{HashSet, VecDeque};
use std::sync::OnceLock;

use num_complex::Complex64;

/// Elementary gates used to spell out each symplectic class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate2 {
    HA,
    HB,
    PA,
    PB,
    /// CNOT with `a` as control.
    Cx,
}

impl Gate2 {
    const ALL: [Gate2; 5] = [Gate2::HA, Gate2::HB, Gate2::PA, Gate2::PB, Gate2::Cx];

    /// Conjugate a signed two-qubit Pauli.
    fn conjugate(self, key: u8, sign: bool) -> (u8, bool) {
        let bit = |i: u8| (key >> i) & 1;
        let (xa, za, xb, zb) = (bit(0), bit(1), bit(2), bit(3));
        let (mut xa2, mut za2, mut xb2, mut zb2) = (xa, za, xb, zb);
        let mut s = sign;
        match self {
            Gate2::HA => {
                s ^= xa & za == 1;
                xa2 = za;
                za2 = xa;
            }
            Gate2::HB => {
                s ^= xb & zb == 1;
                xb2 = zb;
                zb2 = xb;
            }
            Gate2::PA => {
                s ^= xa & za == 1;
                za2 = za ^ xa;
            }
            Gate2::PB => {
                s ^= xb & zb == 1;
                zb2 = zb ^ xb;
            }
            Gate2::Cx => {
                s ^= xa & zb & (xb ^ za ^ 1) == 1;
                xb2 = xb ^ xa;
                za2 = za ^ zb;
            }
        }
        (xa2 | za2 << 1 | xb2 << 2 | zb2 << 3, s)
    }

    /// Unitary in the basis `|b_a b_b>`, index `2 b_a + b_b`.
    pub fn matrix(self) -> [[Complex64; 4]; 4] {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Gate2::HA => [[h, z, h, z], [z, h, z, h], [h, z, -h, z], [z, h, z, -h]],
            Gate2::HB => [[h, h, z, z], [h, -h, z, z], [z, z, h, h], [z, z, h, -h]],
            Gate2::PA => [[o, z, z, z], [z, o, z, z], [z, z, i, z], [z, z, z, i]],
            Gate2::PB => [[o, z, z, z], [z, i, z, z], [z, z, o, z], [z, z, z, i]],
            Gate2::Cx => [[o, z, z, z], [z, o, z, z], [z, z, z, o], [z, z, o, z]],
        }
    }
}

/// Pauli lookup table of one two-qubit Clifford.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clifford2 {
    table: [(u8, bool); 16],
    word: Vec<Gate2>,
    frame: u8,
}

fn anticommutes(p: u8, q: u8) -> bool {
    let bit = |v: u8, i: u8| (v >> i) & 1;
    let s = bit(p, 0) & bit(q, 1) ^ bit(p, 1) & bit(q, 0) ^ bit(p, 2) & bit(q, 3) ^ bit(p, 3) & bit(q, 2);
    s == 1
}

fn linear_image(word: &[Gate2], key: u8) -> u8 {
    word.iter().fold(key, |k, g| g.conjugate(k, false).0)
}

impl Clifford2 {
    pub const GROUP_ORDER: usize = 11520;
    pub const SYMPLECTIC_ORDER: usize = 720;

    fn from_word(word: Vec<Gate2>, frame: u8) -> Self {
        let mut table = [(0u8, false); 16];
        for (key, slot) in table.iter_mut().enumerate() {
            let (img, s) = word.iter().fold((key as u8, false), |(k, s), g| g.conjugate(k, s));
            *slot = (img, s ^ anticommutes(frame, img));
        }
        Self { table, word, frame }
    }

    /// Image `(key', sign flip)` of Pauli `key`.
    #[inline]
    pub fn image(&self, key: usize) -> (u8, bool) {
        self.table[key]
    }

    pub fn word(&self) -> &[Gate2] {
        &self.word
    }

    /// Pauli frame applied after the word, in key encoding.
    pub fn frame(&self) -> u8 {
        self.frame
    }

    pub fn element(index: usize) -> &'static Clifford2 {
        &group()[index]
    }

    /// `CZ_ab H_a H_b`.
    pub fn q_gate() -> &'static Clifford2 {
        static Q: OnceLock<Clifford2> = OnceLock::new();
        // CZ = H_b CX H_b
        Q.get_or_init(|| Clifford2::from_word(vec![Gate2::HA, Gate2::HB, Gate2::HB, Gate2::Cx, Gate2::HB], 0))
    }

    /// Unitary matrix (basis index `2 b_a + b_b`), up to global phase.
    pub fn unitary(&self) -> [[Complex64; 4]; 4] {
        let mut u = identity4();
        for g in &self.word {
            u = matmul4(&g.matrix(), &u);
        }
        matmul4(&pauli_matrix(self.frame), &u)
    }
}

fn identity4() -> [[Complex64; 4]; 4] {
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

fn matmul4(a: &[[Complex64; 4]; 4], b: &[[Complex64; 4]; 4]) -> [[Complex64; 4]; 4] {
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

/// `X^xa Z^za (x) X^xb Z^zb`; the frame's overall sign is irrelevant.
fn pauli_matrix(key: u8) -> [[Complex64; 4]; 4] {
    let bit = |i: u8| usize::from((key >> i) & 1 == 1);
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for col in 0..4 {
        let (ba, bb) = (col >> 1, col & 1);
        // Z acts first (diagonal sign), then X flips the basis state
        let sign = if (bit(1) & ba) ^ (bit(3) & bb) == 1 { -1.0 } else { 1.0 };
        let row = 2 * (ba ^ bit(0)) + (bb ^ bit(2));
        out[row][col] = Complex64::new(sign, 0.0);
    }
    out
}

fn group() -> &'static [Clifford2] {
    static GROUP: OnceLock<Vec<Clifford2>> = OnceLock::new();
    GROUP.get_or_init(|| {
        symplectic_words()
            .into_iter()
            .flat_map(|w| (0..16u8).map(move |f| Clifford2::from_word(w.clone(), f)))
            .collect()
    })
}

/// Shortest gate word for each of the 720 symplectic maps, found by
/// breadth-first search from the identity.
fn symplectic_words() -> Vec<Vec<Gate2>> {
    let key_of = |word: &[Gate2]| -> [u8; 4] { [1, 2, 4, 8].map(|b| linear_image(word, b)) };
    let mut seen: HashSet<[u8; 4]> = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    queue.push_back(Vec::new());
    seen.insert(key_of(&[]));
    while let Some(word) = queue.pop_front() {
        for g in Gate2::ALL {
            let mut next = word.clone();
            next.push(g);
            let k = key_of(&next);
            if seen.insert(k) {
                queue.push_back(next);
            }
        }
        out.push(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_has_expected_order() {
        assert_eq!(symplectic_words().len(), Clifford2::SYMPLECTIC_ORDER);
        let distinct: HashSet<[(u8, bool); 16]> = group().iter().map(|c| c.table).collect();
        assert_eq!(distinct.len(), Clifford2::GROUP_ORDER);
    }

    #[test]
    fn tables_preserve_commutation() {
        for c in group().iter().step_by(7) {
            for p in 0..16u8 {
                for q in 0..16u8 {
                    assert_eq!(anticommutes(p, q), anticommutes(c.image(p as usize).0, c.image(q as usize).0));
                }
            }
        }
    }

    #[test]
    fn exact_group_average_of_z_outcome_is_half() {
        // P(+1) for Z_a measured on C|00>: deterministic when C Z_a C^dagger-type
        // stabilizer commutes with Z_a, else 1/2.
        let mut total = 0.0;
        for c in group() {
            let mut t = super::super::Tableau::init_z_polarized(2);
            t.apply_clifford2(c, 0, 1);
            total += if t.is_random_measurement(0) {
                0.5
            } else {
                let m = t.clone().measure_z_with(0, false);
                f64::from(m.outcome == 1)
            };
        }
        assert!((total / Clifford2::GROUP_ORDER as f64 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unitaries_are_unitary() {
        for c in group().iter().step_by(97) {
            let u = c.unitary();
            for i in 0..4 {
                for j in 0..4 {
                    let dot: Complex64 = (0..4).map(|k| u[k][i].conj() * u[k][j]).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - Complex64::new(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
    }
}
