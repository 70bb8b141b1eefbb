mod common;

use std::f64::consts::LN_2;

use common::*;
use scrambler_core::circuit::{CircuitParams, GateKind, Model};
use scrambler_core::oracle::{self, DenseState};
use scrambler_core::stabilizer::{Clifford2, Tableau};

#[test]
fn every_two_qubit_clifford_matches_its_unitary() {
    for idx in 0..Clifford2::GROUP_ORDER {
        let c = Clifford2::element(idx);
        let mut t = Tableau::init_bell_reference(2, 2).unwrap();
        let mut d = DenseState::zero(4).unwrap();
        for i in 0..2 {
            d.apply_gate(&oracle::h(), &[i]).unwrap();
            d.apply_gate(&oracle::cnot(), &[i, 2 + i]).unwrap();
        }
        t.apply_clifford2(c, 0, 1);
        d.apply_gate(&oracle::from_array4(&c.unitary()), &[0, 1]).unwrap();
        assert!(stabilizers_match(&t, &d), "element {idx}");
    }
}

#[test]
fn q_gate_on_zero_state_is_a_cluster_pair() {
    let mut t = Tableau::init_z_polarized(2);
    t.apply_q_gate(0, 1);
    assert_eq!(t.stabilizer_string(0), "+XZ");
    assert_eq!(t.stabilizer_string(1), "+ZX");
    let mut d = DenseState::zero(2).unwrap();
    d.apply_gate(&oracle::from_array4(&Clifford2::q_gate().unitary()), &[0, 1]).unwrap();
    assert!(stabilizers_match(&t, &d));
    assert!((d.entropy(&[0]) - LN_2).abs() < 1e-10);
}

#[test]
fn gate_rules_match_dense_conjugation() {
    let mut t = Tableau::init_bell_reference(3, 3).unwrap();
    let mut d = DenseState::zero(6).unwrap();
    for i in 0..3 {
        d.apply_gate(&oracle::h(), &[i]).unwrap();
        d.apply_gate(&oracle::cnot(), &[i, 3 + i]).unwrap();
    }
    t.apply_h(0).apply_p(1).apply_cnot(2, 0).apply_cz(1, 2).apply_p(0).apply_h(2);
    for (u, q) in [(oracle::h(), vec![0]), (oracle::phase(), vec![1])] {
        d.apply_gate(&u, &q).unwrap();
    }
    d.apply_gate(&oracle::cnot(), &[2, 0]).unwrap();
    d.apply_gate(&oracle::cz(), &[1, 2]).unwrap();
    d.apply_gate(&oracle::phase(), &[0]).unwrap();
    d.apply_gate(&oracle::h(), &[2]).unwrap();
    assert!(stabilizers_match(&t, &d));
}

fn check_replay(model: Model, n: usize, k: usize, p: f64, seed: u64) {
    let params = CircuitParams::new(model, n, k, 3 * n, p, seed);
    let kind = params.gate_kind();
    let mut traj = trajectory(params, kind);
    let mut dense = DenseState::zero(n).unwrap();
    for t in 1..=params.n_layers {
        let before = traj.record().unwrap().events.len();
        traj.step();
        let events = traj.record().unwrap().events[before..].to_vec();
        let probs = replay_layer(&mut dense, &params, kind, t, &events);
        for (e, pr) in events.iter().zip(probs) {
            if e.was_random {
                assert!((pr - 0.5).abs() < 1e-8);
            } else {
                assert!((pr - 1.0).abs() < 1e-8, "deterministic outcome mismatch at t={t}");
            }
        }
        assert!(stabilizers_match(traj.state(), &dense));
        for (bits, s) in all_region_entropies(traj.state(), &dense) {
            assert!((s - bits as f64 * LN_2).abs() < 1e-8);
        }
    }
}

#[test]
fn monitored_trajectories_replay_through_the_oracle() {
    for seed in 0..6 {
        check_replay(Model::Pwr2, 8, 1 + (seed as usize % 3), 0.3, seed);
        check_replay(Model::Aa, 8, 1, 0.25, seed);
        check_replay(Model::Nn, 4, 1, 0.4, seed);
    }
}

#[test]
fn random_clifford_states_have_quantized_entropy() {
    let params = CircuitParams::new(Model::Aa, 8, 1, 6, 0.0, 42);
    let mut traj = trajectory(params, GateKind::RandomClifford);
    let mut dense = DenseState::zero(8).unwrap();
    for t in 1..=6 {
        traj.step();
        replay_layer(&mut dense, &params, GateKind::RandomClifford, t, &[]);
    }
    let all = all_region_entropies(traj.state(), &dense);
    assert_eq!(all.len(), 255);
    for (bits, s) in all {
        assert!((s - bits as f64 * LN_2).abs() < 1e-8);
        assert!((dense.renyi2(&[0, 3]) - dense.entropy(&[0, 3])).abs() < 1e-8);
    }
}
