#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scrambler_core::circuit::{self, CircuitParams, GateKind};
use scrambler_core::oracle::{self, DenseState};
use scrambler_core::seed::{self, tag};
use scrambler_core::stabilizer::{Clifford2, MeasurementEvent, Subregion, Tableau, Trajectory};

/// Gate matrix the trajectory applies to pair `i` of layer `t`.
pub fn gate_matrix(params: &CircuitParams, kind: GateKind, t: usize, i: usize) -> DMatrix<Complex64> {
    let c = match kind {
        GateKind::Q => Clifford2::q_gate(),
        GateKind::RandomClifford => {
            let idx = seed::derive(params.seed, &[tag::GATE, t as u64, i as u64]) % Clifford2::GROUP_ORDER as u64;
            Clifford2::element(idx as usize)
        }
    };
    oracle::from_array4(&c.unitary())
}

/// Advance a dense state through layer `t`, forcing the recorded outcomes.
/// Returns the Born probability of each recorded outcome.
pub fn replay_layer(
    dense: &mut DenseState,
    params: &CircuitParams,
    kind: GateKind,
    t: usize,
    events: &[MeasurementEvent],
) -> Vec<f64> {
    for (i, &(a, b)) in circuit::layer_pairs(params, t).iter().enumerate() {
        dense.apply_gate(&gate_matrix(params, kind, t, i), &[a, b]).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut probs = Vec::new();
    for e in events.iter().filter(|e| e.layer == t) {
        let p_plus = dense.prob_plus(e.qubit);
        probs.push(if e.outcome == 1 { p_plus } else { 1.0 - p_plus });
        dense.measure_z(e.qubit, Some(e.outcome), &mut rng).unwrap();
    }
    if circuit::phase_after(params, t) {
        for q in 0..params.n_qubits {
            dense.apply_gate(&oracle::phase(), &[q]).unwrap();
        }
    }
    probs
}

/// Every stabilizer generator has expectation equal to its sign.
pub fn stabilizers_match(t: &Tableau, dense: &DenseState) -> bool {
    let n = t.n();
    (n..2 * n).all(|r| {
        let (x, z, neg) = t.row(r);
        let want = if neg { -1.0 } else { 1.0 };
        (dense.pauli_expectation(&x, &z) - want).abs() < 1e-8
    })
}

/// Entropy of every nonempty region, as (stabilizer bits, oracle nats).
pub fn all_region_entropies(t: &Tableau, dense: &DenseState) -> Vec<(usize, f64)> {
    let n = t.n();
    (1u32..1 << n)
        .map(|mask| {
            let qs: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
            let r = Subregion::new(n, qs.iter().copied()).unwrap();
            (t.entropy_bits(&r), dense.entropy(&qs))
        })
        .collect()
}

pub fn trajectory(params: CircuitParams, kind: GateKind) -> Trajectory {
    Trajectory::new(params, kind, Tableau::init_z_polarized(params.n_qubits)).unwrap().recording()
}
