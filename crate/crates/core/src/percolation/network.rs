use crate::circuit::{is_perfect_matching, CircuitSchedule};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bond {
    pub u: u32,
    pub v: u32,
    pub cuttable: bool,
}

/// Vertex/bond graph of a circuit.
///
/// For a circuit network, vertices `0..n_gates` are gates (layer by layer,
/// pair order within a layer), followed by `N` source vertices and `N` sink
/// vertices, one per qubit. Only gate vertices count toward cluster size.
#[derive(Clone, Debug, PartialEq)]
pub struct PercolationNetwork {
    pub n_vertices: usize,
    pub bonds: Vec<Bond>,
    pub input_bonds: Vec<usize>,
    pub output_bonds: Vec<usize>,
    /// Cluster-size contribution of each vertex.
    pub weights: Vec<u32>,
    pub sources: Vec<u32>,
    pub sinks: Vec<u32>,
}

impl PercolationNetwork {
    /// A bare graph where every vertex counts and no boundary is marked.
    pub fn from_bonds(n_vertices: usize, bonds: Vec<Bond>) -> Self {
        Self {
            n_vertices,
            bonds,
            input_bonds: Vec::new(),
            output_bonds: Vec::new(),
            weights: vec![1; n_vertices],
            sources: Vec::new(),
            sinks: Vec::new(),
        }
    }

    pub fn n_cuttable(&self) -> usize {
        self.bonds.iter().filter(|b| b.cuttable).count()
    }

    pub fn degree(&self, v: u32) -> usize {
        self.bonds.iter().filter(|b| b.u == v || b.v == v).count()
    }
}

/// One vertex per gate and one bond per worldline segment. Input segments
/// are permanent; every segment that follows an interaction layer,
/// including the output segments, can be cut.
pub fn build_network(schedule: &CircuitSchedule) -> Result<PercolationNetwork> {
    let n = schedule.n_qubits();
    let n_gates: usize = schedule.layers.iter().map(|l| l.pairs.len()).sum();
    let source = |q: usize| (n_gates + q) as u32;
    let sink = |q: usize| (n_gates + n + q) as u32;
    let mut last: Vec<u32> = (0..n).map(source).collect();
    let mut bonds = Vec::with_capacity(n * (schedule.layers.len() + 1));
    let mut input_bonds = Vec::with_capacity(n);
    let mut g = 0u32;
    for (li, layer) in schedule.layers.iter().enumerate() {
        if !is_perfect_matching(n, &layer.pairs) {
            return Err(Error::NotAMatching(layer.layer_index));
        }
        for &(a, b) in &layer.pairs {
            for q in [a, b] {
                if li == 0 {
                    input_bonds.push(bonds.len());
                }
                bonds.push(Bond { u: last[q], v: g, cuttable: li > 0 });
                last[q] = g;
            }
            g += 1;
        }
    }
    let mut output_bonds = Vec::with_capacity(n);
    for (q, &v) in last.iter().enumerate() {
        output_bonds.push(bonds.len());
        bonds.push(Bond { u: v, v: sink(q), cuttable: true });
    }
    let mut weights = vec![1; n_gates];
    weights.extend(std::iter::repeat(0).take(2 * n));
    Ok(PercolationNetwork {
        n_vertices: n_gates + 2 * n,
        bonds,
        input_bonds,
        output_bonds,
        weights,
        sources: (0..n).map(source).collect(),
        sinks: (0..n).map(sink).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_schedule, CircuitParams, GateLayer, Model};

    fn net(model: Model, n: usize, k: usize, t: usize) -> PercolationNetwork {
        build_network(&build_schedule(&CircuitParams::new(model, n, k, t, 0.3, 9)).unwrap()).unwrap()
    }

    #[test]
    fn counts_by_construction() {
        let a = net(Model::Pwr2, 4, 1, 2);
        assert_eq!((a.n_vertices - 8, a.bonds.len(), a.n_cuttable()), (4, 12, 8));
        let b = net(Model::Pwr2, 2, 1, 1);
        assert_eq!((b.n_vertices - 4, b.bonds.len(), b.n_cuttable()), (1, 4, 2));
        for (model, n, k, t) in [(Model::Pwr2, 32, 3, 17), (Model::Aa, 16, 1, 9), (Model::Nn, 8, 1, 8)] {
            let x = net(model, n, k, t);
            assert_eq!(x.bonds.len(), n * (t + 1));
            assert_eq!(x.n_cuttable(), n * t);
            assert_eq!(x.input_bonds.len(), n);
            assert_eq!(x.output_bonds.len(), n);
        }
    }

    #[test]
    fn interior_degree_is_four() {
        for (model, n, k) in [(Model::Pwr2, 16, 2), (Model::Aa, 16, 1), (Model::Nn, 4, 1), (Model::Pwr2, 2, 1)] {
            let x = net(model, n, k, 6);
            let gates = x.n_vertices - 2 * n;
            for v in 0..gates as u32 {
                assert_eq!(x.degree(v), 4);
            }
            for &s in x.sources.iter().chain(&x.sinks) {
                assert_eq!(x.degree(s), 1);
            }
        }
    }

    #[test]
    fn rejects_non_matching_layers() {
        let mut s = build_schedule(&CircuitParams::new(Model::Nn, 4, 1, 2, 0.0, 0)).unwrap();
        s.layers[1] = GateLayer { layer_index: 2, pairs: vec![(0, 1), (1, 2)] };
        assert_eq!(build_network(&s), Err(Error::NotAMatching(2)));
    }
}
