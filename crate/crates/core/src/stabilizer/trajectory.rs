//! Monitored-circuit trajectories: gates, then sampled Z measurements, then
//! the phase layer if one is scheduled.

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Clifford2, Subregion, Tableau};
use crate::circuit::{self, build_thermalizer, CircuitParams, CircuitSchedule, GateKind};
use crate::error::{Error, Result};
use crate::seed::{self, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    pub layer: usize,
    pub qubit: usize,
    pub outcome: i8,
    pub was_random: bool,
}

/// Append-only log of every measurement in a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub events: Vec<MeasurementEvent>,
}

impl MeasurementRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Entanglement quantity evaluated on the current state, in nats.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Entropy(Subregion),
    MutualInformation(Subregion, Subregion),
    Tripartite(Subregion, Subregion, Subregion),
    /// Entropy of the whole tableau; zero for every pure state.
    FullEntropy,
}

impl Observable {
    pub fn evaluate(&self, t: &Tableau) -> Result<f64> {
        match self {
            Observable::Entropy(a) => Ok(t.entropy(a)),
            Observable::MutualInformation(a, b) => t.mutual_information(a, b),
            Observable::Tripartite(a, b, c) => t.tripartite_mi(a, b, c),
            Observable::FullEntropy => Ok(t.full_entropy_bits() as f64 * std::f64::consts::LN_2),
        }
    }

    /// `I(A:B:C)` over the first three quarters of `n` qubits.
    pub fn quarters(n: usize) -> Result<Self> {
        let q = n / 4;
        Ok(Observable::Tripartite(
            Subregion::range(n, 0..q)?,
            Subregion::range(n, q..2 * q)?,
            Subregion::range(n, 2 * q..3 * q)?,
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalTimes {
    /// After every layer.
    Every,
    /// After the listed layers (`0` means the initial state).
    At(BTreeSet<usize>),
    /// After the last layer only.
    Final,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservablePlan {
    pub observables: Vec<(String, Observable)>,
    pub times: EvalTimes,
}

impl ObservablePlan {
    pub fn new(times: EvalTimes) -> Self {
        Self { observables: Vec::new(), times }
    }

    pub fn with(mut self, name: impl Into<String>, obs: Observable) -> Self {
        self.observables.push((name.into(), obs));
        self
    }

    fn wants(&self, t: usize, last: usize) -> bool {
        match &self.times {
            EvalTimes::Every => true,
            EvalTimes::At(set) => set.contains(&t),
            EvalTimes::Final => t == last,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: usize,
    pub observable: String,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct TrajectoryOutput {
    pub samples: Vec<Sample>,
    pub record: MeasurementRecord,
    pub state: Tableau,
}

/// Layer-by-layer evolution of a tableau under a monitored circuit.
///
/// Gate content and measurement outcomes are pure functions of
/// `params.seed`: random Clifford gates are indexed by `(t, pair)` and
/// random outcomes come from a dedicated stream. The circuit acts on
/// qubits `0..N` of the tableau; any further qubits form an untouched
/// reference.
pub struct Trajectory {
    params: CircuitParams,
    gate_kind: GateKind,
    state: Tableau,
    t: usize,
    outcomes: ChaCha8Rng,
    record: Option<MeasurementRecord>,
    signless: bool,
}

impl Trajectory {
    pub fn new(params: CircuitParams, gate_kind: GateKind, state: Tableau) -> Result<Self> {
        params.validate()?;
        if state.n() < params.n_qubits {
            return Err(Error::SizeMismatch { schedule: params.n_qubits, tableau: state.n() });
        }
        Ok(Self {
            params,
            gate_kind,
            state,
            t: 0,
            outcomes: seed::stream(params.seed, &[tag::OUTCOME]),
            record: None,
            signless: false,
        })
    }

    /// Keep a [`MeasurementRecord`] of every measurement from now on.
    pub fn recording(mut self) -> Self {
        self.record = Some(MeasurementRecord::default());
        self.signless = false;
        self
    }

    /// Skip sign bookkeeping. Outcomes are never drawn, so only entropies
    /// and the count of random measurements remain meaningful.
    pub fn signless(mut self) -> Self {
        self.record = None;
        self.signless = true;
        self
    }

    pub fn layer(&self) -> usize {
        self.t
    }

    pub fn state(&self) -> &Tableau {
        &self.state
    }

    pub fn record(&self) -> Option<&MeasurementRecord> {
        self.record.as_ref()
    }

    pub fn into_parts(self) -> (Tableau, Option<MeasurementRecord>) {
        (self.state, self.record)
    }

    /// Advance one interaction layer using the layer's own pair list.
    pub fn step(&mut self) -> usize {
        let pairs = circuit::layer_pairs(&self.params, self.t + 1);
        self.step_with(&pairs)
    }

    /// Advance one layer with explicit pairs; returns the number of random
    /// measurement outcomes.
    pub fn step_with(&mut self, pairs: &[(usize, usize)]) -> usize {
        self.t += 1;
        let t = self.t;
        match self.gate_kind {
            GateKind::Q => {
                self.state.apply_q_layer(pairs, self.params.n_qubits);
            }
            GateKind::RandomClifford => {
                let gates: Vec<(&Clifford2, usize, usize)> = pairs
                    .iter()
                    .enumerate()
                    .map(|(i, &(a, b))| {
                        let idx = seed::derive(self.params.seed, &[tag::GATE, t as u64, i as u64])
                            % Clifford2::GROUP_ORDER as u64;
                        (Clifford2::element(idx as usize), a, b)
                    })
                    .collect();
                self.state.apply_clifford_layer(&gates, self.params.n_qubits);
            }
        }
        let mut random = 0;
        for q in circuit::measured_qubits(&self.params, t) {
            if self.signless {
                random += usize::from(self.state.project_z(q));
                continue;
            }
            let m = self.state.measure_z(q, &mut self.outcomes);
            random += usize::from(m.was_random);
            if let Some(rec) = self.record.as_mut() {
                rec.events.push(MeasurementEvent { layer: t, qubit: q, outcome: m.outcome, was_random: m.was_random });
            }
        }
        if circuit::phase_after(&self.params, t) {
            self.state.apply_p_all(self.params.n_qubits);
        }
        random
    }
}

/// Run the full schedule from `initial`, evaluating `plan` at its times.
pub fn run_trajectory(schedule: &CircuitSchedule, initial: Tableau, plan: &ObservablePlan) -> Result<TrajectoryOutput> {
    let mut traj = Trajectory::new(schedule.params, schedule.gate_kind, initial)?.recording();
    let last = schedule.layers.len();
    let mut samples = Vec::new();
    let observe = |t: usize, state: &Tableau, samples: &mut Vec<Sample>| -> Result<()> {
        if plan.wants(t, last) {
            for (name, obs) in &plan.observables {
                samples.push(Sample { t, observable: name.clone(), value: obs.evaluate(state)? });
            }
        }
        Ok(())
    };
    observe(0, traj.state(), &mut samples)?;
    for layer in &schedule.layers {
        if !circuit::is_perfect_matching(schedule.n_qubits(), &layer.pairs) {
            return Err(Error::NotAMatching(layer.layer_index));
        }
        traj.step_with(&layer.pairs);
        observe(layer.layer_index, traj.state(), &mut samples)?;
    }
    let (state, record) = traj.into_parts();
    Ok(TrajectoryOutput { samples, record: record.unwrap_or_default(), state })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Purification {
    /// First layer after which the reference qubit is pure.
    Purified(usize),
    /// Still mixed after this many layers.
    Censored(usize),
}

impl Purification {
    pub fn layers(self) -> usize {
        match self {
            Purification::Purified(t) | Purification::Censored(t) => t,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, Purification::Censored(_))
    }
}

/// Evolve a system of `params.n_qubits` qubits entangled with one reference
/// qubit (the tableau's last qubit) until the reference purifies.
/// Layers stream past `params.n_layers` up to `max_layers`.
pub fn purification_time(params: &CircuitParams, initial: Tableau, max_layers: usize) -> Result<Purification> {
    let reference = Subregion::new(initial.n(), [initial.n() - 1])?;
    if initial.entropy_bits(&reference) == 0 {
        return Ok(Purification::Purified(0));
    }
    let mut traj = Trajectory::new(*params, params.gate_kind(), initial)?.signless();
    while traj.layer() < max_layers {
        if traj.step() > 0 && traj.state().entropy_bits(&reference) == 0 {
            return Ok(Purification::Purified(traj.layer()));
        }
    }
    Ok(Purification::Censored(max_layers))
}

/// One reference qubit maximally entangled with system qubit 0, then
/// scrambled by `4N` layers of random nearest-neighbor Cliffords.
pub fn prepare_purification(n_system: usize, seed: u64) -> Result<Tableau> {
    let thermalizer = build_thermalizer(n_system, 4 * n_system, seed)?;
    let initial = Tableau::init_bell_reference(n_system, 1)?;
    let mut traj = Trajectory::new(thermalizer.params, thermalizer.gate_kind, initial)?;
    for layer in &thermalizer.layers {
        traj.step_with(&layer.pairs);
    }
    Ok(traj.into_parts().0)
}

/// `N` system qubits each Bell-paired with a reference qubit, evolved under
/// the monitored circuit for `params.n_layers` layers. Row signs of the
/// result are unspecified.
pub fn prepare_code_state(params: &CircuitParams) -> Result<Tableau> {
    let initial = Tableau::init_bell_reference(params.n_qubits, params.n_qubits)?;
    let mut traj = Trajectory::new(*params, params.gate_kind(), initial)?.signless();
    for _ in 0..params.n_layers {
        traj.step();
    }
    Ok(traj.into_parts().0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_schedule, Model};

    fn params(model: Model, n: usize, k: usize, t: usize, p: f64, seed: u64) -> CircuitParams {
        CircuitParams::new(model, n, k, t, p, seed)
    }

    #[test]
    fn signless_runs_keep_entropies() {
        for model in [Model::Pwr2, Model::Aa] {
            let p = params(model, 16, 2, 24, 0.2, 5);
            let mut signed = Trajectory::new(p, p.gate_kind(), Tableau::init_z_polarized(16)).unwrap();
            let mut bare = Trajectory::new(p, p.gate_kind(), Tableau::init_z_polarized(16)).unwrap().signless();
            for _ in 0..24 {
                assert_eq!(signed.step(), bare.step());
                for len in 1..16 {
                    let a = Subregion::range(16, 0..len).unwrap();
                    assert_eq!(signed.state().entropy_bits(&a), bare.state().entropy_bits(&a));
                }
            }
        }
    }

    #[test]
    fn unitary_run_keeps_state_pure() {
        let s = build_schedule(&params(Model::Pwr2, 16, 2, 12, 0.0, 3)).unwrap();
        let plan = ObservablePlan::new(EvalTimes::Every).with("S_full", Observable::FullEntropy);
        let out = run_trajectory(&s, Tableau::init_z_polarized(16), &plan).unwrap();
        assert_eq!(out.samples.len(), 13);
        assert!(out.samples.iter().all(|s| s.value == 0.0));
        assert!(out.record.events.is_empty());
    }

    #[test]
    fn unitary_run_preserves_reference_entropy() {
        let n = 8;
        let s = build_schedule(&params(Model::Pwr2, n, 3, 20, 0.0, 5)).unwrap();
        let r = Subregion::range(2 * n, n..2 * n).unwrap();
        let plan = ObservablePlan::new(EvalTimes::Every).with("S_R", Observable::Entropy(r));
        let out = run_trajectory(&s, Tableau::init_bell_reference(n, n).unwrap(), &plan).unwrap();
        for smp in &out.samples {
            assert!((smp.value - n as f64 * std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let s = build_schedule(&params(Model::Nn, 8, 1, 2, 0.0, 0)).unwrap();
        let plan = ObservablePlan::new(EvalTimes::Final);
        assert_eq!(
            run_trajectory(&s, Tableau::init_z_polarized(4), &plan).unwrap_err(),
            Error::SizeMismatch { schedule: 8, tableau: 4 }
        );
    }

    #[test]
    fn full_measurement_purifies_in_one_layer() {
        let init = prepare_purification(8, 11).unwrap();
        let p = params(Model::Pwr2, 8, 1, 8, 1.0, 2);
        assert_eq!(purification_time(&p, init, 512).unwrap(), Purification::Purified(1));
    }

    #[test]
    fn unitary_never_purifies() {
        let init = prepare_purification(8, 11).unwrap();
        let p = params(Model::Pwr2, 8, 1, 8, 0.0, 2);
        assert_eq!(purification_time(&p, init, 64).unwrap(), Purification::Censored(64));
    }

    #[test]
    fn thermalized_state_keeps_one_bit_with_reference() {
        let t = prepare_purification(16, 4).unwrap();
        let r = Subregion::new(17, [16]).unwrap();
        assert_eq!(t.entropy_bits(&r), 1);
        assert_eq!(t.full_entropy_bits(), 0);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let s = build_schedule(&params(Model::Aa, 16, 1, 10, 0.3, 77)).unwrap();
        let plan = ObservablePlan::new(EvalTimes::Final).with("I3", Observable::quarters(16).unwrap());
        let a = run_trajectory(&s, Tableau::init_z_polarized(16), &plan).unwrap();
        let b = run_trajectory(&s, Tableau::init_z_polarized(16), &plan).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.record, b.record);
        assert_eq!(a.state, b.state);
        let json = a.record.to_json();
        assert_eq!(MeasurementRecord::from_json(&json).unwrap(), a.record);
    }
}
