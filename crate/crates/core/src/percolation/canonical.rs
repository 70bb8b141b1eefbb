use serde::Serialize;

use super::sweep::{SweepResult, Tracked};
use crate::error::{Error, Result};

const CUTOFF: f64 = 1e-16;

/// Cluster observables recorded by the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moment {
    C1 = 0,
    C2 = 1,
    C4 = 2,
    Span = 3,
}

/// Observable against measurement rate `p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalCurve {
    pub p: Vec<f64>,
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_real: usize,
}

/// Binomial weights `B(m, M, q)` normalized to 1 at the peak
/// `m = floor(qM)`, built outward by the ratio recurrence and truncated
/// once they drop below `1e-16`. Returns the first `m` and the weights.
pub fn binomial_weights(m_total: usize, q: f64) -> (usize, Vec<f64>) {
    if q <= 0.0 {
        return (0, vec![1.0]);
    }
    if q >= 1.0 {
        return (m_total, vec![1.0]);
    }
    let mf = m_total as f64;
    let peak = ((q * mf).floor() as usize).min(m_total);
    let ratio = q / (1.0 - q);
    let mut up = Vec::new();
    let mut b = 1.0;
    for m in peak + 1..=m_total {
        b *= (mf - m as f64 + 1.0) / m as f64 * ratio;
        if b < CUTOFF {
            break;
        }
        up.push(b);
    }
    let mut down = Vec::new();
    b = 1.0;
    for m in (0..peak).rev() {
        b *= (m as f64 + 1.0) / (mf - m as f64) / ratio;
        if b < CUTOFF {
            break;
        }
        down.push(b);
    }
    let lo = peak - down.len();
    let mut w: Vec<f64> = down.into_iter().rev().collect();
    w.push(1.0);
    w.extend(up);
    (lo, w)
}

/// Canonical value at occupation `q` of a microcanonical sequence `Q_m`,
/// `m = 0..=M`.
pub fn convolve(q_m: &[f64], q: f64) -> f64 {
    let (lo, w) = binomial_weights(q_m.len() - 1, q);
    let num: f64 = w.iter().enumerate().map(|(j, b)| b * q_m[lo + j]).sum();
    num / w.iter().sum::<f64>()
}

fn tracked<'a>(sweep: &'a SweepResult, p: f64) -> Result<&'a Tracked> {
    sweep.tracked.iter().find(|t| (t.p - p).abs() < 1e-12).ok_or(Error::UntrackedGridPoint(p))
}

/// Means of the four moments and the covariance matrix of those means.
fn mean_cov(t: &Tracked, r: usize) -> ([f64; 4], [[f64; 4]; 4]) {
    let rf = r as f64;
    let mean = t.sum.map(|s| s / rf);
    let mut cov = [[0.0; 4]; 4];
    if r > 1 {
        for a in 0..4 {
            for b in 0..4 {
                cov[a][b] = (t.cross[a][b] - rf * mean[a] * mean[b]) / (rf - 1.0) / rf;
            }
        }
    }
    (mean, cov)
}

fn delta_err(cov: &[[f64; 4]; 4], grad: &[(usize, f64)]) -> f64 {
    let mut v = 0.0;
    for &(a, ga) in grad {
        for &(b, gb) in grad {
            v += ga * gb * cov[a][b];
        }
    }
    v.max(0.0).sqrt()
}

fn curve_on_grid(
    sweep: &SweepResult,
    p_grid: &[f64],
    f: impl Fn(&[f64; 4], &[[f64; 4]; 4]) -> Result<(f64, f64)>,
) -> Result<CanonicalCurve> {
    if p_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut curve = CanonicalCurve { p: Vec::new(), value: Vec::new(), stderr: Vec::new(), n_real: sweep.n_realizations };
    for &p in p_grid {
        let (mean, cov) = mean_cov(tracked(sweep, p)?, sweep.n_realizations);
        let (v, e) = f(&mean, &cov)?;
        curve.p.push(p);
        curve.value.push(v);
        curve.stderr.push(e);
    }
    Ok(curve)
}

/// Canonical curve of one moment on a grid tracked by the sweep.
pub fn convolve_canonical(sweep: &SweepResult, p_grid: &[f64], moment: Moment) -> Result<CanonicalCurve> {
    let i = moment as usize;
    curve_on_grid(sweep, p_grid, |mean, cov| Ok((mean[i], cov[i][i].max(0.0).sqrt())))
}

/// `b = (3 - <C^4> / <C^2>^2) / 2`.
pub fn binder(c2: f64, c4: f64) -> Result<f64> {
    if c2 == 0.0 {
        return Err(Error::ZeroSecondMoment);
    }
    Ok(0.5 * (3.0 - c4 / (c2 * c2)))
}

/// Binder cumulant of the largest cluster, with delta-method errors.
pub fn binder_cumulant(sweep: &SweepResult, p_grid: &[f64]) -> Result<CanonicalCurve> {
    curve_on_grid(sweep, p_grid, |m, cov| {
        let (c2, c4) = (m[1], m[2]);
        let b = binder(c2, c4)?;
        let grad = [(1, c4 / (c2 * c2 * c2)), (2, -0.5 / (c2 * c2))];
        Ok((b, delta_err(cov, &grad)))
    })
}

/// `chi = <C^2> - <C>^2`, clamped at zero.
pub fn susceptibility(sweep: &SweepResult, p_grid: &[f64]) -> Result<CanonicalCurve> {
    curve_on_grid(sweep, p_grid, |m, cov| {
        let chi = (m[1] - m[0] * m[0]).max(0.0);
        Ok((chi, delta_err(cov, &[(0, -2.0 * m[0]), (1, 1.0)])))
    })
}

pub fn spanning_probability(sweep: &SweepResult, p_grid: &[f64]) -> Result<CanonicalCurve> {
    convolve_canonical(sweep, p_grid, Moment::Span)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub p: f64,
    pub chi: f64,
    /// `<C_max>` at the peak.
    pub c_max: f64,
    pub c_max_err: f64,
}

/// Peak of a susceptibility curve from a parabola through the grid maximum
/// and its neighbours. The largest cluster is then evaluated at the peak;
/// its error is the relative error at the nearest tracked point.
pub fn susceptibility_peak(sweep: &SweepResult, chi: &CanonicalCurve) -> Result<Peak> {
    let n = chi.value.len();
    let (i, &top) = chi
        .value
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::EmptyGrid)?;
    if i == 0 || i + 1 == n || top <= 0.0 || chi.value.iter().filter(|&&v| v == top).count() > 1 {
        return Err(Error::NoPeak);
    }
    let (x0, x1, x2) = (chi.p[i - 1], chi.p[i], chi.p[i + 1]);
    let (y0, y1, y2) = (chi.value[i - 1], top, chi.value[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    let p = if a < 0.0 { (0.5 * (x0 + x1) - d01 / (2.0 * a)).clamp(x0, x2) } else { x1 };
    let b = d01 - a * (x0 + x1);
    let peak_chi = if a < 0.0 { y1 + a * (p - x1) * (p - x1) + (b + 2.0 * a * x1) * (p - x1) } else { y1 };
    let c_max = convolve(&sweep.mean_c, 1.0 - p);
    let near = tracked(sweep, x1)?;
    let (mean, cov) = mean_cov(near, sweep.n_realizations);
    let rel = if mean[0] > 0.0 { cov[0][0].max(0.0).sqrt() / mean[0] } else { 0.0 };
    Ok(Peak { p, chi: peak_chi, c_max, c_max_err: rel * c_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_schedule, CircuitParams, Model};
    use crate::percolation::{build_network, newman_ziff_sweep_tracked};

    #[test]
    fn small_binomial_sum() {
        assert!((convolve(&[1.0, 1.5, 2.0], 0.5) - 1.5).abs() < 1e-15);
        assert_eq!(convolve(&[1.0, 1.5, 2.0], 1.0), 2.0);
        assert_eq!(convolve(&[1.0, 1.5, 2.0], 0.0), 1.0);
    }

    #[test]
    fn weights_match_exact_binomial() {
        let m = 40;
        let q: f64 = 0.37;
        let (lo, w) = binomial_weights(m, q);
        let norm: f64 = w.iter().sum();
        let mut ln_fact = vec![0.0f64; m + 1];
        for i in 1..=m {
            ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
        }
        for (j, b) in w.iter().enumerate() {
            let k = lo + j;
            let exact = (ln_fact[m] - ln_fact[k] - ln_fact[m - k] + k as f64 * q.ln() + (m - k) as f64 * (1.0 - q).ln()).exp();
            assert!((b / norm - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_stay_finite_for_huge_networks() {
        let (lo, w) = binomial_weights(10_000_000, 0.4);
        assert!(w.iter().all(|x| x.is_finite() && *x > 0.0));
        assert!(lo > 3_900_000 && lo + w.len() < 4_100_000);
    }

    #[test]
    fn deterministic_cluster_gives_unit_binder_and_zero_chi() {
        let s = build_schedule(&CircuitParams::new(Model::Pwr2, 16, 1, 16, 0.0, 1)).unwrap();
        let net = build_network(&s).unwrap();
        let grid = [0.0, 0.2, 0.5, 1.0];
        let sweep = newman_ziff_sweep_tracked(&net, 50, 2, &grid);
        let b = binder_cumulant(&sweep, &[0.0, 1.0]).unwrap();
        assert_eq!(b.value, vec![1.0, 1.0]);
        let chi = susceptibility(&sweep, &grid).unwrap();
        assert!(chi.value.iter().all(|&v| v >= 0.0));
        assert_eq!(chi.value[0], 0.0);
        let span = spanning_probability(&sweep, &[0.0, 1.0]).unwrap();
        assert_eq!(span.value, vec![1.0, 0.0]);
        assert_eq!(convolve_canonical(&sweep, &[0.3], Moment::C1), Err(Error::UntrackedGridPoint(0.3)));
        assert_eq!(convolve_canonical(&sweep, &[], Moment::C1), Err(Error::EmptyGrid));
    }

    #[test]
    fn binder_arithmetic() {
        assert_eq!(binder(2.0, 12.0).unwrap(), 0.0);
        assert_eq!(binder(3.0, 9.0).unwrap(), 1.0);
        assert_eq!(binder(0.0, 1.0), Err(Error::ZeroSecondMoment));
    }
}
