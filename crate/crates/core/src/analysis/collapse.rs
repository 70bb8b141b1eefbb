//! Scaling-collapse fits.
//!
//! Every sample is mapped to `x = (p - p_c) N^(1/nu)`, `y = v / N^z` and
//! compared with a master curve estimated from the other sizes by a
//! weighted local linear fit. The cost is the mean of
//! `(y - Y)^2 / (dy^2 + dY^2)` over all samples that fall inside the range
//! of at least one other size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::crossing::mean_std;
use super::{sorted_by_size, ObservableCurve};
use crate::error::{Error, Result};
use crate::seed::{stream, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ansatz {
    /// `v = f((p - p_c) N^(1/nu))`.
    Standard,
    /// `v = N^z f((p - p_c) N^(1/nu))`.
    Dynamic,
    /// `v / log2 N = N^z f((p - p_c) N^(1/nu))`.
    LogNormalized,
}

impl Ansatz {
    pub fn name(self) -> &'static str {
        match self {
            Ansatz::Standard => "standard",
            Ansatz::Dynamic => "dynamic",
            Ansatz::LogNormalized => "log_normalized",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    /// `None` lets `z` float; ignored by [`Ansatz::Standard`].
    pub z_fixed: Option<f64>,
    /// Search box for `p_c`; defaults to the common p range of the data.
    pub p_c_bounds: Option<(f64, f64)>,
    pub nu_bounds: (f64, f64),
    pub z_bounds: (f64, f64),
    /// Coarse-grid points per parameter.
    pub grid: usize,
    pub noise_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { z_fixed: Some(1.0), p_c_bounds: None, nu_bounds: (0.3, 5.0), z_bounds: (-1.0, 2.0), grid: 21, noise_scale: 1.0 }
    }
}

impl FitConfig {
    pub fn free_z() -> Self {
        Self { z_fixed: None, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub ansatz: Ansatz,
    pub p_c: f64,
    pub p_c_err: f64,
    pub nu: f64,
    pub nu_err: f64,
    /// `None` for the standard ansatz.
    pub z: Option<f64>,
    /// `None` when `z` is absent or held fixed.
    pub z_err: Option<f64>,
    pub cost: f64,
    pub sizes_used: Vec<usize>,
    /// Some parameter of the best fit sits on its search bound.
    pub at_bound: bool,
    pub n_boot: usize,
}

struct Prepared {
    /// Per size: `(N, p, v, dv)` with the log normalization applied.
    sizes: Vec<(f64, Vec<f64>, Vec<f64>, Vec<f64>)>,
}

impl Prepared {
    fn new(curves: &[&ObservableCurve], ansatz: Ansatz, values: &[Vec<f64>]) -> Self {
        let sizes = curves
            .iter()
            .zip(values)
            .map(|(c, v)| {
                let n = c.n as f64;
                let norm = if ansatz == Ansatz::LogNormalized { n.log2() } else { 1.0 };
                (n, c.p.clone(), v.iter().map(|x| x / norm).collect(), c.stderr.iter().map(|s| s / norm).collect())
            })
            .collect();
        Self { sizes }
    }

    fn cost(&self, p_c: f64, nu: f64, z: f64) -> f64 {
        let scaled: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = self
            .sizes
            .iter()
            .map(|(n, p, v, s)| {
                let a = n.powf(1.0 / nu);
                let b = n.powf(-z);
                (p.iter().map(|x| (x - p_c) * a).collect(), v.iter().map(|y| y * b).collect(), s.iter().map(|e| e * b).collect())
            })
            .collect();
        let mut total = 0.0;
        let mut count = 0usize;
        let mut pts: Vec<(f64, f64, f64)> = Vec::with_capacity(8);
        for (i, (xi, yi, si)) in scaled.iter().enumerate() {
            for j in 0..xi.len() {
                let x = xi[j];
                pts.clear();
                let mut bracketing = Vec::new();
                for (o, (xo, _, _)) in scaled.iter().enumerate() {
                    if o == i || x < xo[0] || x > xo[xo.len() - 1] {
                        continue;
                    }
                    let hi = xo.partition_point(|&t| t < x).clamp(1, xo.len() - 1);
                    bracketing.push((o, hi));
                }
                if bracketing.is_empty() {
                    continue;
                }
                // two bracketing samples per size, widened to four when only
                // one other size covers x
                let reach = if bracketing.len() == 1 { 2 } else { 1 };
                for &(o, hi) in &bracketing {
                    let (xo, yo, so) = &scaled[o];
                    let lo_idx = hi.saturating_sub(reach);
                    let hi_idx = (hi + reach).min(xo.len());
                    for m in lo_idx..hi_idx {
                        pts.push((xo[m], yo[m], so[m]));
                    }
                }
                if let Some((yy, var)) = local_linear(&pts, x) {
                    total += (yi[j] - yy).powi(2) / (si[j] * si[j] + var);
                    count += 1;
                }
            }
        }
        if count == 0 {
            f64::INFINITY
        } else {
            total / count as f64
        }
    }
}

/// Weighted linear fit through `pts` evaluated at `x`, with its variance.
fn local_linear(pts: &[(f64, f64, f64)], x: f64) -> Option<(f64, f64)> {
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(px, py, pe) in pts {
        let w = 1.0 / (pe * pe);
        s += w;
        sx += w * px;
        sxx += w * px * px;
        sy += w * py;
        sxy += w * px * py;
    }
    let det = s * sxx - sx * sx;
    if pts.len() < 2 || !(det > 1e-12 * s * sxx) {
        return None;
    }
    let slope = (s * sxy - sx * sy) / det;
    let icpt = (sxx * sy - sx * sxy) / det;
    let var = (sxx - 2.0 * x * sx + x * x * s) / det;
    Some((icpt + slope * x, var.max(0.0)))
}

/// Collapse cost of `curves` at the given parameters (`z` ignored for the
/// standard ansatz).
pub fn collapse_cost(curves: &[ObservableCurve], ansatz: Ansatz, p_c: f64, nu: f64, z: f64) -> Result<f64> {
    let cs = sorted_by_size(curves, 2)?;
    let vals: Vec<Vec<f64>> = cs.iter().map(|c| c.value.clone()).collect();
    let z = if ansatz == Ansatz::Standard { 0.0 } else { z };
    Ok(Prepared::new(&cs, ansatz, &vals).cost(p_c, nu, z))
}

struct Problem<'a> {
    data: Prepared,
    ansatz: Ansatz,
    cfg: &'a FitConfig,
    bounds: Vec<(f64, f64)>,
}

impl Problem<'_> {
    fn z_of(&self, theta: &[f64]) -> f64 {
        match (self.ansatz, self.cfg.z_fixed) {
            (Ansatz::Standard, _) => 0.0,
            (_, Some(z)) => z,
            (_, None) => theta[2],
        }
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        if theta.iter().zip(&self.bounds).any(|(t, (lo, hi))| t < lo || t > hi) {
            return f64::INFINITY;
        }
        self.data.cost(theta[0], theta[1], self.z_of(theta))
    }

    fn grid_search(&self) -> Vec<f64> {
        let g = self.cfg.grid.max(2);
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| (0..g).map(|i| lo + (hi - lo) * i as f64 / (g - 1) as f64).collect())
            .collect();
        let total = g.pow(axes.len() as u32);
        (0..total)
            .into_par_iter()
            .map(|mut idx| {
                let theta: Vec<f64> = axes
                    .iter()
                    .map(|a| {
                        let v = a[idx % g];
                        idx /= g;
                        v
                    })
                    .collect();
                (self.eval(&theta), theta)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, t)| t)
            .expect("non-empty grid")
    }
}

/// Derivative-free Nelder-Mead minimization starting at `x0`.
fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let mut fx = f(&x);
        if !fx.is_finite() {
            x[i] = x0[i] - step[i];
            fx = f(&x);
        }
        simplex.push((x, fx));
    }
    let point = |c: &[f64], d: &[f64], t: f64| c.iter().zip(d).map(|(a, b)| a + t * (b - a)).collect::<Vec<f64>>();
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let size = (1..=n)
            .map(|i| simplex[i].0.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= 1e-12 * (1.0 + best.abs()) && size < 1e-9 {
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|s| s.0[j]).sum::<f64>() / n as f64).collect();
        let xr = point(&centroid, &simplex[n].0, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = point(&centroid, &simplex[n].0, -2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = point(&centroid, &xr, 0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = point(&centroid, &simplex[n].0, 0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = point(&x0, &s.0, 0.5);
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Fit `(p_c, nu[, z])` by a coarse grid search refined with Nelder-Mead;
/// errors are the spread of `n_boot` refits of noise-perturbed data.
pub fn collapse_fit(
    curves: &[ObservableCurve],
    ansatz: Ansatz,
    cfg: &FitConfig,
    n_boot: usize,
    seed: u64,
) -> Result<ScalingFit> {
    let cs = sorted_by_size(curves, 3)?;
    let p_lo = cs.iter().map(|c| c.p[0]).fold(f64::NEG_INFINITY, f64::max);
    let p_hi = cs.iter().map(|c| c.p[c.p.len() - 1]).fold(f64::INFINITY, f64::min);
    let p_bounds = cfg.p_c_bounds.unwrap_or((p_lo, p_hi));
    if !(p_bounds.0 < p_bounds.1) {
        return Err(Error::NoOverlap);
    }
    let mut bounds = vec![p_bounds, cfg.nu_bounds];
    let free_z = ansatz != Ansatz::Standard && cfg.z_fixed.is_none();
    if free_z {
        bounds.push(cfg.z_bounds);
    }
    let step: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.05 * (hi - lo)).collect();
    let base_vals: Vec<Vec<f64>> = cs.iter().map(|c| c.value.clone()).collect();
    let problem = Problem { data: Prepared::new(&cs, ansatz, &base_vals), ansatz, cfg, bounds: bounds.clone() };

    let start = problem.grid_search();
    let (best, cost) = nelder_mead(|t| problem.eval(t), &start, &step, 4000);
    if !cost.is_finite() {
        return Err(Error::FitFailed("no overlap between collapsed curves".into()));
    }

    let refits: Vec<Vec<f64>> = (0..n_boot)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = stream(seed, &[tag::BOOTSTRAP, b as u64]);
            let vals: Vec<Vec<f64>> = cs.iter().map(|c| c.perturbed(cfg.noise_scale, &mut rng)).collect();
            let pb = Problem { data: Prepared::new(&cs, ansatz, &vals), ansatz, cfg, bounds: bounds.clone() };
            let (t, c) = nelder_mead(|t| pb.eval(t), &best, &step, 4000);
            c.is_finite().then_some(t)
        })
        .collect();
    let err = |i: usize| if refits.is_empty() { f64::NAN } else { mean_std(refits.iter().map(|t| t[i])).1 };

    let at_bound = best.iter().zip(&bounds).any(|(t, (lo, hi))| (t - lo).abs() < 1e-3 * (hi - lo) || (hi - t).abs() < 1e-3 * (hi - lo));
    let z = (ansatz != Ansatz::Standard).then(|| problem.z_of(&best));
    Ok(ScalingFit {
        ansatz,
        p_c: best[0],
        p_c_err: err(0),
        nu: best[1],
        nu_err: err(1),
        z,
        z_err: free_z.then(|| err(2)),
        cost,
        sizes_used: cs.iter().map(|c| c.n).collect(),
        at_bound,
        n_boot: refits.len(),
    })
}
