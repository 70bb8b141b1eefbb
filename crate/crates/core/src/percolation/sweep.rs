use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::canonical::{binomial_weights, Moment};
use super::network::PercolationNetwork;
use super::union_find::{UnionFind, SINK, SOURCE};
use crate::seed::{self, tag};

/// Realization-averaged microcanonical observables at every number `m` of
/// occupied cuttable bonds, plus per-realization canonical moments on a
/// tracked grid of `p` values for error estimation.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Number of cuttable bonds `M`.
    pub n_bonds: usize,
    pub n_realizations: usize,
    pub mean_c: Vec<f64>,
    pub mean_c2: Vec<f64>,
    pub mean_c4: Vec<f64>,
    pub spanning: Vec<f64>,
    pub(crate) tracked: Vec<Tracked>,
}

/// Sums over realizations of the canonical moments at one `p`, and of their
/// pairwise products.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Tracked {
    pub p: f64,
    pub sum: [f64; 4],
    pub cross: [[f64; 4]; 4],
}

impl SweepResult {
    pub fn microcanonical(&self, moment: Moment) -> &[f64] {
        match moment {
            Moment::C1 => &self.mean_c,
            Moment::C2 => &self.mean_c2,
            Moment::C4 => &self.mean_c4,
            Moment::Span => &self.spanning,
        }
    }

    pub fn tracked_grid(&self) -> Vec<f64> {
        self.tracked.iter().map(|t| t.p).collect()
    }
}

struct Worker {
    uf: UnionFind,
    order: Vec<u32>,
    c: Vec<u32>,
    sum_c: Vec<u64>,
    sum_c2: Vec<u64>,
    sum_c4: Vec<u128>,
    first_span: Vec<u32>,
    canon: Vec<(usize, Vec<[f64; 4]>)>,
}

struct Plan<'a> {
    net: &'a PercolationNetwork,
    flags: Vec<u8>,
    fixed: Vec<(u32, u32)>,
    cuttable: Vec<(u32, u32)>,
    weights: Vec<(f64, usize, Vec<f64>)>,
    seed: u64,
}

impl Plan<'_> {
    fn worker(&self) -> Worker {
        let m = self.cuttable.len();
        Worker {
            uf: UnionFind::new(&self.net.weights, &self.flags),
            order: (0..m as u32).collect(),
            c: vec![0; m + 1],
            sum_c: vec![0; m + 1],
            sum_c2: vec![0; m + 1],
            sum_c4: vec![0; m + 1],
            first_span: vec![0; m + 2],
            canon: Vec::new(),
        }
    }

    fn realize(&self, w: &mut Worker, r: usize) {
        let m_total = self.cuttable.len();
        w.uf.reset();
        let mut span_at = None;
        for &(a, b) in &self.fixed {
            if w.uf.union(a, b) == SOURCE | SINK {
                span_at = Some(0);
            }
        }
        for (i, o) in w.order.iter_mut().enumerate() {
            *o = i as u32;
        }
        w.order.shuffle(&mut seed::stream(self.seed, &[tag::SWEEP, r as u64]));
        w.c[0] = w.uf.max_weight;
        for m in 1..=m_total {
            let (a, b) = self.cuttable[w.order[m - 1] as usize];
            if w.uf.union(a, b) == SOURCE | SINK && span_at.is_none() {
                span_at = Some(m);
            }
            w.c[m] = w.uf.max_weight;
        }
        for (m, &c) in w.c.iter().enumerate() {
            let c = u64::from(c);
            w.sum_c[m] += c;
            w.sum_c2[m] += c * c;
            w.sum_c4[m] += u128::from(c * c) * u128::from(c * c);
        }
        let span_at = span_at.unwrap_or(m_total + 1);
        w.first_span[span_at] += 1;
        let values = self
            .weights
            .iter()
            .map(|(_, lo, ws)| {
                let (mut s1, mut s2, mut s4, mut sp, mut norm) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for (j, &wt) in ws.iter().enumerate() {
                    let m = lo + j;
                    let c = f64::from(w.c[m]);
                    let c2 = c * c;
                    s1 += wt * c;
                    s2 += wt * c2;
                    s4 += wt * c2 * c2;
                    if m >= span_at {
                        sp += wt;
                    }
                    norm += wt;
                }
                [s1 / norm, s2 / norm, s4 / norm, sp / norm]
            })
            .collect();
        w.canon.push((r, values));
    }
}

fn merge(mut a: Worker, b: Worker) -> Worker {
    for (x, y) in a.sum_c.iter_mut().zip(&b.sum_c) {
        *x += y;
    }
    for (x, y) in a.sum_c2.iter_mut().zip(&b.sum_c2) {
        *x += y;
    }
    for (x, y) in a.sum_c4.iter_mut().zip(&b.sum_c4) {
        *x += y;
    }
    for (x, y) in a.first_span.iter_mut().zip(&b.first_span) {
        *x += y;
    }
    a.canon.extend(b.canon);
    a
}

/// Newman-Ziff sweep without a tracked grid.
pub fn newman_ziff_sweep(net: &PercolationNetwork, n_realizations: usize, seed: u64) -> SweepResult {
    newman_ziff_sweep_tracked(net, n_realizations, seed, &[])
}

/// Newman-Ziff sweep over `n_realizations` random insertion orders.
/// Permanent bonds are inserted first; canonical moments are recorded per
/// realization at every `p` in `p_grid` so that canonical curves on that
/// grid carry realization-scatter errors.
pub fn newman_ziff_sweep_tracked(
    net: &PercolationNetwork,
    n_realizations: usize,
    seed: u64,
    p_grid: &[f64],
) -> SweepResult {
    assert!(n_realizations >= 1, "sweep needs at least one realization");
    let mut flags = vec![0u8; net.n_vertices];
    net.sources.iter().for_each(|&s| flags[s as usize] |= SOURCE);
    net.sinks.iter().for_each(|&s| flags[s as usize] |= SINK);
    let fixed = net.bonds.iter().filter(|b| !b.cuttable).map(|b| (b.u, b.v)).collect();
    let cuttable: Vec<(u32, u32)> = net.bonds.iter().filter(|b| b.cuttable).map(|b| (b.u, b.v)).collect();
    let m_total = cuttable.len();
    let weights = p_grid
        .iter()
        .map(|&p| {
            let (lo, w) = binomial_weights(m_total, 1.0 - p);
            (p, lo, w)
        })
        .collect();
    let plan = Plan { net, flags, fixed, cuttable, weights, seed };
    let total = (0..n_realizations)
        .into_par_iter()
        .fold(
            || plan.worker(),
            |mut w, r| {
                plan.realize(&mut w, r);
                w
            },
        )
        .reduce_with(merge)
        .expect("at least one realization");

    let rf = n_realizations as f64;
    let mut canon = total.canon;
    canon.sort_by_key(|(r, _)| *r);
    let tracked = p_grid
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut t = Tracked { p, sum: [0.0; 4], cross: [[0.0; 4]; 4] };
            for (_, vals) in &canon {
                let v = vals[i];
                for a in 0..4 {
                    t.sum[a] += v[a];
                    for b in 0..4 {
                        t.cross[a][b] += v[a] * v[b];
                    }
                }
            }
            t
        })
        .collect();
    let mut spanning = Vec::with_capacity(m_total + 1);
    let mut acc = 0u32;
    for m in 0..=m_total {
        acc += total.first_span[m];
        spanning.push(f64::from(acc) / rf);
    }
    SweepResult {
        n_bonds: m_total,
        n_realizations,
        mean_c: total.sum_c.iter().map(|&s| s as f64 / rf).collect(),
        mean_c2: total.sum_c2.iter().map(|&s| s as f64 / rf).collect(),
        mean_c4: total.sum_c4.iter().map(|&s| s as f64 / rf).collect(),
        spanning,
        tracked,
    }
}

/// Plain Monte Carlo at fixed `p`: every cuttable bond is cut
/// independently with probability `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectEstimate {
    pub p: f64,
    /// Means of `C`, `C^2`, `C^4` and the spanning indicator.
    pub mean: [f64; 4],
    pub stderr: [f64; 4],
    pub n_samples: usize,
}

pub fn direct_fixed_p(net: &PercolationNetwork, p: f64, n_samples: usize, seed: u64) -> DirectEstimate {
    let mut flags = vec![0u8; net.n_vertices];
    net.sources.iter().for_each(|&s| flags[s as usize] |= SOURCE);
    net.sinks.iter().for_each(|&s| flags[s as usize] |= SINK);
    let samples: Vec<[f64; 4]> = (0..n_samples)
        .into_par_iter()
        .map_init(
            || UnionFind::new(&net.weights, &flags),
            |uf, r| {
                uf.reset();
                let mut rng = seed::stream(seed, &[tag::SWEEP, u64::MAX, r as u64]);
                let mut spans = false;
                for b in &net.bonds {
                    if (!b.cuttable || rng.gen::<f64>() >= p) && uf.union(b.u, b.v) == SOURCE | SINK {
                        spans = true;
                    }
                }
                let c = f64::from(uf.max_weight);
                [c, c * c, c.powi(4), f64::from(u8::from(spans))]
            },
        )
        .collect();
    let n = n_samples as f64;
    let mut mean = [0.0; 4];
    let mut stderr = [0.0; 4];
    for a in 0..4 {
        mean[a] = samples.iter().map(|s| s[a]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s[a] - mean[a]).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        stderr[a] = (var / n).sqrt();
    }
    DirectEstimate { p, mean, stderr, n_samples }
}
