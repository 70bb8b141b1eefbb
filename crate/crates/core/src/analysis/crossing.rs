//! Crossing points of curves for consecutive system sizes.

use rayon::prelude::*;
use serde::Serialize;

use super::pchip::Pchip;
use super::{sorted_by_size, Estimate, ObservableCurve};
use crate::error::{Error, Result};
use crate::seed::{stream, tag};

const SCAN: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCrossing {
    pub n_small: usize,
    pub n_large: usize,
    /// Crossing of the unperturbed curves.
    pub p_base: f64,
    pub p_mean: f64,
    pub p_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub p_c: f64,
    pub p_c_err: f64,
    pub pairs: Vec<PairCrossing>,
    pub n_boot: usize,
    /// Replicates in which some pair had no crossing.
    pub n_failed: usize,
}

impl Crossing {
    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.p_c, self.p_c_err)
    }
}

/// All sign changes of `f - g` on `[lo, hi]`, refined by bisection, with
/// the slope difference at each root.
fn roots(f: &Pchip, g: &Pchip, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let d = |t: f64| f.eval(t) - g.eval(t);
    let xs: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let ds: Vec<f64> = xs.iter().map(|&t| d(t)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < SCAN {
        let (a, b) = (ds[i], ds[i + 1]);
        if a != 0.0 && b != 0.0 && (a < 0.0) != (b < 0.0) {
            let (mut l, mut h, mut fl) = (xs[i], xs[i + 1], a);
            for _ in 0..60 {
                let m = 0.5 * (l + h);
                let fm = d(m);
                if fm == 0.0 {
                    l = m;
                    h = m;
                    break;
                }
                if (fm < 0.0) == (fl < 0.0) {
                    l = m;
                    fl = fm;
                } else {
                    h = m;
                }
            }
            out.push(0.5 * (l + h));
        } else if b == 0.0 && a != 0.0 {
            // touch point: count it only if the sign flips across the zero run
            let mut j = i + 1;
            while j < SCAN && ds[j] == 0.0 {
                j += 1;
            }
            if ds[j] != 0.0 && (ds[j] < 0.0) != (a < 0.0) {
                out.push(0.5 * (xs[i + 1] + xs[j - 1]));
            }
            i = j;
            continue;
        }
        i += 1;
    }
    out.into_iter().map(|t| (t, f.derivative(t) - g.derivative(t))).collect()
}

fn interpolants(curves: &[&ObservableCurve], values: &[Vec<f64>]) -> Vec<Pchip> {
    curves.iter().zip(values).map(|(c, v)| Pchip::new(&c.p, v)).collect()
}

/// Crossing points with bootstrap errors; see [`crossing_point_scaled`].
pub fn crossing_point(curves: &[ObservableCurve], n_boot: usize, seed: u64) -> Result<Crossing> {
    crossing_point_scaled(curves, n_boot, seed, 1.0)
}

/// Each replicate adds Gaussian noise of `noise_scale` standard errors to
/// every sample, interpolates monotonically, and averages the crossings of
/// consecutive sizes. When the unperturbed difference changes sign more
/// than once, the steepest crossing is taken, and replicates follow the
/// crossing nearest to it.
pub fn crossing_point_scaled(curves: &[ObservableCurve], n_boot: usize, seed: u64, noise_scale: f64) -> Result<Crossing> {
    let cs = sorted_by_size(curves, 2)?;
    let spans: Vec<(f64, f64)> = cs
        .windows(2)
        .map(|w| (w[0].p[0].max(w[1].p[0]), w[0].p[w[0].p.len() - 1].min(w[1].p[w[1].p.len() - 1])))
        .collect();
    if spans.iter().any(|(lo, hi)| lo >= hi) {
        return Err(Error::NoOverlap);
    }

    let base_values: Vec<Vec<f64>> = cs.iter().map(|c| c.value.clone()).collect();
    let base = interpolants(&cs, &base_values);
    let mut anchors = Vec::with_capacity(spans.len());
    for (i, &(lo, hi)) in spans.iter().enumerate() {
        let r = roots(&base[i], &base[i + 1], lo, hi);
        let best = r
            .iter()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .ok_or(Error::NoCrossing(cs[i].n, cs[i + 1].n))?;
        anchors.push(best.0);
    }

    let replicates: Vec<Option<Vec<f64>>> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, &[tag::BOOTSTRAP, b as u64]);
            let vals: Vec<Vec<f64>> = cs.iter().map(|c| c.perturbed(noise_scale, &mut rng)).collect();
            let f = interpolants(&cs, &vals);
            spans
                .iter()
                .enumerate()
                .map(|(i, &(lo, hi))| {
                    roots(&f[i], &f[i + 1], lo, hi)
                        .into_iter()
                        .map(|r| r.0)
                        .min_by(|a, b| (a - anchors[i]).abs().total_cmp(&(b - anchors[i]).abs()))
                })
                .collect()
        })
        .collect();

    let good: Vec<&Vec<f64>> = replicates.iter().flatten().collect();
    let n_failed = n_boot - good.len();
    let (p_c, p_c_err) = if good.is_empty() {
        (anchors.iter().sum::<f64>() / anchors.len() as f64, f64::NAN)
    } else {
        mean_std(good.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64))
    };
    let pairs = (0..spans.len())
        .map(|i| {
            let (m, s) = if good.is_empty() { (anchors[i], f64::NAN) } else { mean_std(good.iter().map(|r| r[i])) };
            PairCrossing { n_small: cs[i].n, n_large: cs[i + 1].n, p_base: anchors[i], p_mean: m, p_err: s }
        })
        .collect();
    Ok(Crossing { p_c, p_c_err, pairs, n_boot, n_failed })
}

pub(crate) fn mean_std(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.iter().all(|&x| x == v[0]) {
        return (v[0], 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Model;

    fn curve(n: usize, p: &[f64], f: impl Fn(f64) -> f64, s: f64) -> ObservableCurve {
        let v = p.iter().map(|&x| f(x)).collect();
        ObservableCurve::new(n, 1, Model::Pwr2, "b", p.to_vec(), v, vec![s; p.len()]).unwrap()
    }

    fn grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
        (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
    }

    #[test]
    fn crossing_lines() {
        let p = grid(0.0, 1.0, 11);
        let cs = [curve(8, &p, |x| x, 1e-4), curve(16, &p, |x| 1.0 - x, 1e-4)];
        let c = crossing_point(&cs, 200, 1).unwrap();
        assert!((c.p_c - 0.5).abs() < 1e-3);
        assert!(c.p_c_err < 1e-3 && c.p_c_err > 0.0);
        assert_eq!(c.n_failed, 0);
    }

    #[test]
    fn scaling_function_crossing() {
        let p = grid(0.3, 0.5, 21);
        let f = |n: usize| move |x: f64| 0.5 * (1.0 - ((x - 0.4) * (n as f64).powf(1.0 / 1.33)).tanh());
        let cs: Vec<_> = [32, 64, 128].iter().map(|&n| curve(n, &p, f(n), 0.005)).collect();
        let c = crossing_point(&cs, 500, 2).unwrap();
        assert!((c.p_c - 0.4).abs() < 2.0 * c.p_c_err, "{c:?}");
        assert_eq!(c.pairs.len(), 2);
    }

    #[test]
    fn degenerate_inputs() {
        let p = grid(0.0, 1.0, 11);
        let same = [curve(8, &p, |x| x, 0.01), curve(16, &p, |x| x, 0.01)];
        assert_eq!(crossing_point(&same, 10, 1).unwrap_err(), Error::NoCrossing(8, 16));
        let q = grid(2.0, 3.0, 11);
        let apart = [curve(8, &p, |x| x, 0.01), curve(16, &q, |x| -x, 0.01)];
        assert_eq!(crossing_point(&apart, 10, 1).unwrap_err(), Error::NoOverlap);
        assert!(matches!(crossing_point(&same[..1], 10, 1), Err(Error::TooFewSizes { .. })));
    }

    #[test]
    fn zero_noise_has_zero_spread() {
        let p = grid(0.0, 1.0, 11);
        let cs = [curve(8, &p, |x| x * x, 0.05), curve(16, &p, |x| 0.7 - 0.5 * x, 0.05)];
        let c = crossing_point_scaled(&cs, 50, 3, 0.0).unwrap();
        assert_eq!(c.p_c_err, 0.0);
        assert!((c.p_c - c.pairs[0].p_base).abs() < 1e-15);
    }

    #[test]
    fn invariant_under_reordering_and_rescaling() {
        let p = grid(0.3, 0.5, 11);
        let f = |n: usize| move |x: f64| 1.0 - ((x - 0.41) * n as f64 / 10.0).tanh();
        let cs: Vec<_> = [16, 32, 64].iter().map(|&n| curve(n, &p, f(n), 0.01)).collect();
        let a = crossing_point(&cs, 100, 4).unwrap();
        let rev: Vec<_> = cs.iter().rev().cloned().collect();
        assert_eq!(crossing_point(&rev, 100, 4).unwrap(), a);
        let scaled: Vec<_> = cs.iter().map(|c| c.scaled(7.5).unwrap()).collect();
        let b = crossing_point(&scaled, 100, 4).unwrap();
        assert!((a.p_c - b.p_c).abs() < 1e-9 && (a.p_c_err - b.p_c_err).abs() < 1e-9);
    }
}
