//! Code properties of the state left by a monitored circuit acting on a
//! system maximally entangled with a reference.
//!
//! The tableau holds `N` system qubits followed by the reference qubits.
//! Entropies are counted in bits.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::CircuitParams;
use crate::error::{Error, Result};
use crate::gf2::{self, null_space, BitMatrix, XorBasis};
use crate::seed::{self, tag};
use crate::stabilizer::{prepare_code_state, Subregion, Tableau};

fn reference(t: &Tableau, n_system: usize) -> Subregion {
    Subregion::range(t.n(), n_system..t.n()).expect("reference lies inside the tableau")
}

/// `S_R / (N ln 2)`.
pub fn code_rate(t: &Tableau, n_system: usize) -> f64 {
    t.entropy_bits(&reference(t, n_system)) as f64 / n_system as f64
}

/// Entropy in bits of every circular window of the system:
/// `out[o][l]` is the entropy of qubits `o, o+1, ..., o+l-1 (mod N)`.
pub fn window_entropies(t: &Tableau, n_system: usize) -> Vec<Vec<usize>> {
    let cols = t.stabilizer_columns();
    (0..n_system)
        .into_par_iter()
        .map_init(
            || XorBasis::new(t.n()),
            |basis, o| {
                basis.clear();
                let mut row = Vec::with_capacity(n_system + 1);
                row.push(0);
                for l in 1..=n_system {
                    let q = (o + l - 1) % n_system;
                    basis.insert(&cols[q][0]);
                    basis.insert(&cols[q][1]);
                    row.push(basis.rank() - l);
                }
                row
            },
        )
        .collect()
}

/// `max` over circular offsets of `I(A, R)` in bits, for each window size
/// `|A| = 0..=N`.
pub fn max_mutual_information_by_size(t: &Tableau, n_system: usize) -> Vec<usize> {
    let s = window_entropies(t, n_system);
    let s_r = t.entropy_bits(&reference(t, n_system));
    (0..=n_system)
        .map(|l| {
            (0..n_system)
                .map(|o| {
                    // S(AR) = S(system \ A) because the global state is pure
                    let rest = s[(o + l) % n_system][n_system - l];
                    s[o][l] + s_r - rest
                })
                .max()
                .unwrap_or(0)
        })
        .collect()
}

/// Smallest contiguous window size whose mutual information with the
/// reference reaches `threshold_bits` for some offset, or `None` when no
/// window does (no encoded information).
pub fn contiguous_code_distance(t: &Tableau, n_system: usize, threshold_bits: usize) -> Option<usize> {
    max_mutual_information_by_size(t, n_system).iter().position(|&i| i >= threshold_bits.max(1))
}

fn rank_of(rows: &[Vec<u64>], cols: usize) -> usize {
    let mut m = BitMatrix::zeros(rows.len(), cols);
    for (r, v) in rows.iter().enumerate() {
        m.row_mut(r).copy_from_slice(&v[..gf2::words_for(cols).max(1)]);
    }
    m.into_rank()
}

/// `log2` of the number of undetectable errors localizable on `region`,
/// modulo the stabilizer: with `S` the stabilizers acting trivially on the
/// reference and `C(S)` its centralizer on the system,
/// `dim(C(S) ∩ (S + V_A)) - dim S` where `V_A` are Paulis supported on `A`.
pub fn localizable_error_count(t: &Tableau, n_system: usize, region: &Subregion) -> usize {
    let n = t.n();
    let stab = t.stabilizer_matrix();
    // combinations of generators with no support on the reference
    let mut on_ref = BitMatrix::zeros(2 * (n - n_system), n);
    for g in 0..n {
        for (j, q) in (n_system..n).enumerate() {
            on_ref.set(2 * j, g, stab.get(g, q));
            on_ref.set(2 * j + 1, g, stab.get(g, n + q));
        }
    }
    let dim = 2 * n_system;
    let words = gf2::words_for(dim).max(1);
    let s_gens: Vec<Vec<u64>> = null_space(&on_ref)
        .iter()
        .map(|c| {
            let mut v = vec![0u64; words];
            for g in (0..n).filter(|&g| gf2::get_bit(c, g)) {
                for q in 0..n_system {
                    if stab.get(g, q) {
                        v[q >> 6] ^= 1 << (q & 63);
                    }
                    if stab.get(g, n + q) {
                        let b = n_system + q;
                        v[b >> 6] ^= 1 << (b & 63);
                    }
                }
            }
            v
        })
        .collect();
    let dim_s = rank_of(&s_gens, dim);
    // centralizer: symplectic complement of S on the system
    let mut swapped = BitMatrix::zeros(s_gens.len().max(1), dim);
    for (r, v) in s_gens.iter().enumerate() {
        for q in 0..n_system {
            swapped.set(r, q, gf2::get_bit(v, n_system + q));
            swapped.set(r, n_system + q, gf2::get_bit(v, q));
        }
    }
    let centralizer = null_space(&swapped);
    let v_a: Vec<Vec<u64>> = region
        .qubits()
        .iter()
        .flat_map(|&q| [q, n_system + q])
        .map(|b| {
            let mut v = vec![0u64; words];
            gf2::set_bit(&mut v, b, true);
            v
        })
        .collect();
    let dim_c = rank_of(&centralizer, dim);
    let s_plus_a = rank_of(&[s_gens.clone(), v_a.clone()].concat(), dim);
    let c_plus_a = rank_of(&[centralizer, v_a].concat(), dim);
    dim_c + s_plus_a - c_plus_a - dim_s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HammingVariant {
    AllErrors,
    Contiguous,
}

fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Upper bound on the code rate of a nondegenerate code correcting errors of
/// weight `w = x N`. All errors: `1 - x log2 3 - H(x)`; contiguous errors:
/// `1 - x log2 3 - log2(N - w) / N`.
pub fn hamming_bound(w_over_n: f64, variant: HammingVariant, n: Option<usize>) -> Result<f64> {
    let x = w_over_n;
    let base = 1.0 - x * 3f64.log2();
    match variant {
        HammingVariant::AllErrors => {
            if !(0.0..0.5).contains(&x) {
                return Err(Error::Domain(format!("w/N = {x} outside [0, 1/2)")));
            }
            Ok(base - binary_entropy(x))
        }
        HammingVariant::Contiguous => {
            let n = n.ok_or_else(|| Error::Domain("contiguous bound needs N".into()))?;
            let w = x * n as f64;
            if !(0.0..1.0).contains(&x) || n == 0 {
                return Err(Error::Domain(format!("w/N = {x} outside [0, 1)")));
            }
            Ok(base - (n as f64 - w).log2() / n as f64)
        }
    }
}

/// Code rate and contiguous code distance averaged over trajectories.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodeDiagnostics {
    pub r_code: f64,
    pub r_code_err: f64,
    /// Mean over trajectories that encode at least one qubit.
    pub d_code: f64,
    pub d_code_err: f64,
    pub n_traj: usize,
    pub n_no_code: usize,
}

fn mean_err(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Run `n_traj` code-state trajectories with seeds derived from
/// `params.seed` and summarize them.
pub fn code_diagnostics(params: &CircuitParams, n_traj: usize) -> Result<CodeDiagnostics> {
    let results: Vec<(f64, Option<usize>)> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut p = *params;
            p.seed = seed::derive(params.seed, &[tag::TRAJECTORY, i as u64]);
            let t = prepare_code_state(&p)?;
            Ok((code_rate(&t, p.n_qubits), contiguous_code_distance(&t, p.n_qubits, 1)))
        })
        .collect::<Result<_>>()?;
    let rates: Vec<f64> = results.iter().map(|r| r.0).collect();
    let dists: Vec<f64> = results.iter().filter_map(|r| r.1.map(|d| d as f64)).collect();
    let (r_code, r_code_err) = mean_err(&rates);
    let (d_code, d_code_err) = mean_err(&dists);
    Ok(CodeDiagnostics { r_code, r_code_err, d_code, d_code_err, n_traj, n_no_code: n_traj - dists.len() })
}
