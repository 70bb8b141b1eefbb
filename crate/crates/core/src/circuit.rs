//! Gate schedules for PWR2_k, nearest-neighbor and all-to-all circuits, and
//! the measurement placements laid over them.
//!
//! Qubits are indexed from 0 with periodic boundaries. A PWR2_k circuit
//! cycles through an even block (`m = 1..=k`), an odd block (`m = 1..=k`) and
//! then a layer of single-qubit phase gates. Within sub-layer `m` a qubit `i`
//! is paired with `i + 2^(m-1) mod N` when bit `m-1` of `i` is clear (even
//! block) or set (odd block). Phase layers are not counted as timesteps and
//! carry no measurements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "PWR2")]
    Pwr2,
    #[serde(rename = "NN")]
    Nn,
    #[serde(rename = "AA")]
    Aa,
}

impl Model {
    pub fn id(self) -> u64 {
        match self {
            Model::Pwr2 => 1,
            Model::Nn => 2,
            Model::Aa => 3,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Pwr2 => "PWR2",
            Model::Nn => "NN",
            Model::Aa => "AA",
        })
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "PWR2" => Ok(Model::Pwr2),
            "NN" => Ok(Model::Nn),
            "AA" => Ok(Model::Aa),
            other => Err(format!("unknown model {other:?}")),
        }
    }
}

/// What a two-qubit gate slot holds once the circuit is simulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    /// `CZ_ij H_i H_j`.
    Q,
    /// A uniformly random two-qubit Clifford, drawn per slot from the seed.
    RandomClifford,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub n_qubits: usize,
    pub k: usize,
    pub model: Model,
    pub n_layers: usize,
    pub meas_rate: f64,
    pub seed: u64,
}

impl CircuitParams {
    pub fn new(model: Model, n_qubits: usize, k: usize, n_layers: usize, meas_rate: f64, seed: u64) -> Self {
        Self { n_qubits, k, model, n_layers, meas_rate, seed }
    }

    pub fn log2_n(&self) -> usize {
        self.n_qubits.trailing_zeros() as usize
    }

    pub fn is_complete(&self) -> bool {
        self.model == Model::Pwr2 && self.k == self.log2_n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let max = self.log2_n();
        if self.model == Model::Pwr2 && (self.k == 0 || self.k > max) {
            return Err(Error::BadNonlocality { k: self.k, max });
        }
        if self.n_layers == 0 {
            return Err(Error::NoLayers);
        }
        if !(0.0..=1.0).contains(&self.meas_rate) {
            return Err(Error::BadRate(self.meas_rate));
        }
        Ok(())
    }

    /// Default gate content for the model: PWR2 uses the deterministic `Q`
    /// gate, the NN and AA comparison circuits random Cliffords.
    pub fn gate_kind(&self) -> GateKind {
        match self.model {
            Model::Pwr2 => GateKind::Q,
            Model::Nn | Model::Aa => GateKind::RandomClifford,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateLayer {
    /// 1-based timestep.
    pub layer_index: usize,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSchedule {
    pub params: CircuitParams,
    pub gate_kind: GateKind,
    pub layers: Vec<GateLayer>,
    pub phase_layer_after: BTreeSet<usize>,
}

impl CircuitSchedule {
    pub fn n_qubits(&self) -> usize {
        self.params.n_qubits
    }

    pub fn layer(&self, t: usize) -> Option<&GateLayer> {
        t.checked_sub(1).and_then(|i| self.layers.get(i))
    }

    pub fn has_phase_after(&self, t: usize) -> bool {
        self.phase_layer_after.contains(&t)
    }

    /// Measurement set after layer `t`.
    pub fn measurements(&self, t: usize) -> Result<Vec<usize>> {
        sample_measurements(&self.params, t)
    }

    /// Serializable snapshot including every measurement mask.
    pub fn to_document(&self) -> Result<ScheduleDocument> {
        let p = &self.params;
        let mut measurements = BTreeMap::new();
        for t in 1..=p.n_layers {
            measurements.insert(t, self.measurements(t)?);
        }
        Ok(ScheduleDocument {
            n_qubits: p.n_qubits,
            k: p.k,
            model: p.model,
            n_layers: p.n_layers,
            meas_rate: p.meas_rate,
            seed: p.seed,
            layers: self
                .layers
                .iter()
                .map(|l| l.pairs.iter().map(|&(i, j)| [i, j]).collect())
                .collect(),
            measurements,
        })
    }
}

/// JSON form of a schedule, for debugging and cross-implementation diffs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub n_qubits: usize,
    pub k: usize,
    pub model: Model,
    pub n_layers: usize,
    pub meas_rate: f64,
    pub seed: u64,
    pub layers: Vec<Vec<[usize; 2]>>,
    pub measurements: BTreeMap<usize, Vec<usize>>,
}

/// Position of interaction layer `t` (1-based) inside a PWR2 period:
/// `(odd_block, m)`.
pub fn pwr2_slot(k: usize, t: usize) -> (bool, usize) {
    let c = (t - 1) % (2 * k);
    if c < k {
        (false, c + 1)
    } else {
        (true, c - k + 1)
    }
}

fn pwr2_pairs(n: usize, odd: bool, m: usize) -> Vec<(usize, usize)> {
    let d = 1usize << (m - 1);
    (0..n)
        .filter(|&i| ((i / d) % 2 == 1) == odd)
        .map(|i| (i, (i + d) % n))
        .collect()
}

fn brick_pairs(n: usize, odd: bool) -> Vec<(usize, usize)> {
    let start = usize::from(odd);
    (0..n / 2).map(|b| (2 * b + start, (2 * b + start + 1) % n)).collect()
}

fn random_matching(n: usize, seed: u64, t: usize) -> Vec<(usize, usize)> {
    let mut rng = seed::stream(seed, &[tag::MATCHING, t as u64]);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    perm.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

/// Pairs of interaction layer `t`. Defined for every `t >= 1`, including
/// beyond `params.n_layers`, so open-ended runs can stream layers.
pub fn layer_pairs(params: &CircuitParams, t: usize) -> Vec<(usize, usize)> {
    let n = params.n_qubits;
    match params.model {
        Model::Pwr2 => {
            let (odd, m) = pwr2_slot(params.k, t);
            pwr2_pairs(n, odd, m)
        }
        Model::Nn => brick_pairs(n, t % 2 == 0),
        Model::Aa => random_matching(n, params.seed, t),
    }
}

/// Whether a global phase layer follows interaction layer `t`.
pub fn phase_after(params: &CircuitParams, t: usize) -> bool {
    params.model == Model::Pwr2 && t % (2 * params.k) == 0
}

pub fn build_schedule(params: &CircuitParams) -> Result<CircuitSchedule> {
    params.validate()?;
    let layers = (1..=params.n_layers)
        .map(|t| GateLayer { layer_index: t, pairs: layer_pairs(params, t) })
        .collect();
    let phase_layer_after = (1..=params.n_layers).filter(|&t| phase_after(params, t)).collect();
    Ok(CircuitSchedule { params: *params, gate_kind: params.gate_kind(), layers, phase_layer_after })
}

/// Qubits measured after layer `t`. Each qubit is kept with probability
/// `meas_rate`, decided by hashing `(seed, t, qubit)`.
pub fn sample_measurements(params: &CircuitParams, t: usize) -> Result<Vec<usize>> {
    if t == 0 || t > params.n_layers {
        return Err(Error::LayerOutOfRange { layer: t, n_layers: params.n_layers });
    }
    Ok(measured_qubits(params, t))
}

/// Like [`sample_measurements`] without the upper layer bound.
pub fn measured_qubits(params: &CircuitParams, t: usize) -> Vec<usize> {
    let p = params.meas_rate;
    if p <= 0.0 {
        return Vec::new();
    }
    (0..params.n_qubits)
        .filter(|&q| p >= 1.0 || seed::unit(params.seed, &[tag::MEASURE, t as u64, q as u64]) < p)
        .collect()
}

/// NN brickwork of random two-qubit Cliffords used to scramble an encoded
/// qubit before a purification run. Carries no measurements.
pub fn build_thermalizer(n_qubits: usize, n_layers: usize, seed: u64) -> Result<CircuitSchedule> {
    let params = CircuitParams {
        n_qubits,
        k: 1,
        model: Model::Nn,
        n_layers,
        meas_rate: 0.0,
        seed: seed::derive(seed, &[tag::THERMALIZER]),
    };
    let mut s = build_schedule(&params)?;
    s.gate_kind = GateKind::RandomClifford;
    Ok(s)
}

/// Check that a layer pairs every qubit exactly once.
pub fn is_perfect_matching(n: usize, pairs: &[(usize, usize)]) -> bool {
    if pairs.len() * 2 != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &(i, j) in pairs {
        if i == j || i >= n || j >= n || seen[i] || seen[j] {
            return false;
        }
        seen[i] = true;
        seen[j] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(model: Model, n: usize, k: usize, t: usize) -> CircuitParams {
        CircuitParams::new(model, n, k, t, 0.3, 11)
    }

    fn sorted(mut v: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
        v.sort();
        v
    }

    #[test]
    fn pwr2_first_layers() {
        let s = build_schedule(&params(Model::Pwr2, 8, 1, 4)).unwrap();
        assert_eq!(sorted(s.layers[0].pairs.clone()), vec![(0, 1), (2, 3), (4, 5), (6, 7)]);
        assert_eq!(sorted(s.layers[1].pairs.clone()), vec![(1, 2), (3, 4), (5, 6), (7, 0)]);
        assert_eq!(s.phase_layer_after, [2, 4].into_iter().collect());
    }

    #[test]
    fn pwr2_k2_even_m2_by_scan() {
        let s = build_schedule(&params(Model::Pwr2, 8, 2, 4)).unwrap();
        // brute force: every i with floor(i/2) even pairs with i+2
        let expect: Vec<_> = (0..8).filter(|i| (i / 2) % 2 == 0).map(|i| (i, i + 2)).collect();
        assert_eq!(expect, vec![(0, 2), (1, 3), (4, 6), (5, 7)]);
        assert_eq!(sorted(s.layers[1].pairs.clone()), expect);
        assert!(is_perfect_matching(8, &s.layers[1].pairs));
        assert_eq!(s.phase_layer_after, [4].into_iter().collect());
    }

    #[test]
    fn every_pwr2_layer_is_a_matching_at_the_right_distance() {
        for log_n in 1..=11 {
            let n = 1usize << log_n;
            for k in 1..=log_n {
                let p = params(Model::Pwr2, n, k, 2 * k);
                for t in 1..=2 * k {
                    let pairs = layer_pairs(&p, t);
                    assert!(is_perfect_matching(n, &pairs), "N={n} k={k} t={t}");
                    let (_, m) = pwr2_slot(k, t);
                    let d = 1 << (m - 1);
                    for (i, j) in pairs {
                        let diff = i.abs_diff(j);
                        assert_eq!(diff.min(n - diff), d);
                    }
                }
            }
        }
    }

    #[test]
    fn block_union_is_power_of_two_circulant() {
        let (n, k) = (32, 4);
        let p = params(Model::Pwr2, n, k, 2 * k);
        for odd in [false, true] {
            let mut edges = BTreeSet::new();
            for t in 1..=2 * k {
                if pwr2_slot(k, t).0 != odd {
                    continue;
                }
                for (i, j) in layer_pairs(&p, t) {
                    edges.insert((i.min(j), i.max(j)));
                }
            }
            // each qubit touches exactly one edge per distance 2^0..2^(k-1)
            for q in 0..n {
                let mut dists: Vec<usize> = edges
                    .iter()
                    .filter(|(a, b)| *a == q || *b == q)
                    .map(|(a, b)| {
                        let d = b - a;
                        d.min(n - d)
                    })
                    .collect();
                dists.sort();
                assert_eq!(dists, (0..k).map(|m| 1 << m).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn nn_and_aa_layers_are_matchings() {
        let nn = build_schedule(&params(Model::Nn, 16, 1, 6)).unwrap();
        assert_eq!(sorted(nn.layers[1].pairs.clone())[7], (15, 0));
        let aa = build_schedule(&params(Model::Aa, 64, 1, 10)).unwrap();
        for l in nn.layers.iter().chain(&aa.layers) {
            assert!(is_perfect_matching(l.pairs.len() * 2, &l.pairs));
        }
        assert_ne!(aa.layers[0].pairs, aa.layers[1].pairs);
        assert!(aa.phase_layer_after.is_empty());
    }

    #[test]
    fn thermalizer_bricks() {
        let s = build_thermalizer(4, 2, 5).unwrap();
        assert_eq!(sorted(s.layers[0].pairs.clone()), vec![(0, 1), (2, 3)]);
        assert_eq!(sorted(s.layers[1].pairs.clone()), vec![(1, 2), (3, 0)]);
        assert_eq!(s.gate_kind, GateKind::RandomClifford);
        let big = build_thermalizer(64, 256, 5).unwrap();
        assert_eq!(big.layers.len(), 256);
        assert!(big.layers.iter().all(|l| is_perfect_matching(64, &l.pairs)));
        assert!((1..=256).all(|t| measured_qubits(&big.params, t).is_empty()));
    }

    #[test]
    fn rejects_bad_params() {
        assert_eq!(build_schedule(&params(Model::Pwr2, 12, 1, 4)).unwrap_err(), Error::NotPowerOfTwo(12));
        assert!(matches!(build_schedule(&params(Model::Pwr2, 8, 4, 4)), Err(Error::BadNonlocality { .. })));
        assert_eq!(build_schedule(&params(Model::Pwr2, 8, 1, 0)).unwrap_err(), Error::NoLayers);
        let mut p = params(Model::Pwr2, 8, 1, 4);
        p.meas_rate = 1.5;
        assert!(build_schedule(&p).is_err());
    }

    #[test]
    fn measurement_rates() {
        let mut p = params(Model::Pwr2, 1024, 1, 200);
        p.meas_rate = 0.0;
        assert!((1..=200).all(|t| sample_measurements(&p, t).unwrap().is_empty()));
        p.meas_rate = 1.0;
        assert!((1..=200).all(|t| sample_measurements(&p, t).unwrap().len() == 1024));
        p.meas_rate = 0.5;
        for t in 1..=200 {
            let c = sample_measurements(&p, t).unwrap().len() as f64;
            assert!((c - 512.0).abs() < 5.0 * 16.0, "t={t} count={c}");
        }
        assert!(sample_measurements(&p, 0).is_err());
        assert!(sample_measurements(&p, 201).is_err());
    }

    #[test]
    fn reproducible_documents() {
        let p = params(Model::Aa, 16, 1, 5);
        let a = build_schedule(&p).unwrap().to_document().unwrap();
        let b = build_schedule(&p).unwrap().to_document().unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let json = serde_json::to_value(&a).unwrap();
        for key in ["n_qubits", "k", "model", "n_layers", "meas_rate", "seed", "layers", "measurements"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["model"], "AA");
    }
}
