//! Power-law fits and comparison of critical points.

use serde::Serialize;

use super::Estimate;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLaw {
    pub exponent: f64,
    pub exponent_err: f64,
    pub amplitude: f64,
    /// Reduced chi-square of the log-log fit (0 when unweighted).
    pub chi2_red: f64,
}

/// Weighted least squares of `ln v` on `ln N` for `(N, v, stderr)` points.
/// The slope variance is inflated by the reduced chi-square when it exceeds
/// one. Points without a positive stderr switch the fit to ordinary least
/// squares with the residual variance.
pub fn power_law_fit(points: &[(f64, f64, f64)]) -> Result<PowerLaw> {
    let mut sizes: Vec<f64> = points.iter().map(|p| p.0).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::TooFewSizes { need: 3, got: sizes.len() });
    }
    if points.iter().any(|&(n, v, _)| !(n > 0.0) || !(v > 0.0)) {
        return Err(Error::NonPositive);
    }
    let weighted = points.iter().all(|p| p.2 > 0.0);
    let rows: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(n, v, s)| (n.ln(), v.ln(), if weighted { (v / s).powi(2) } else { 1.0 }))
        .collect();
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, w) in &rows {
        s += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * y;
        sxy += w * x * y;
    }
    let det = s * sxx - sx * sx;
    let slope = (s * sxy - sx * sy) / det;
    let icpt = (sxx * sy - sx * sxy) / det;
    let chi2: f64 = rows.iter().map(|&(x, y, w)| w * (y - icpt - slope * x).powi(2)).sum();
    let dof = (rows.len() - 2).max(1) as f64;
    let var = if weighted {
        s / det * (chi2 / dof).max(1.0)
    } else {
        s / det * chi2 / dof
    };
    Ok(PowerLaw {
        exponent: slope,
        exponent_err: var.sqrt(),
        amplitude: icpt.exp(),
        chi2_red: if weighted { chi2 / dof } else { 0.0 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub difference: f64,
    pub combined_error: f64,
    /// `|difference| > 2 combined_error`.
    pub significant: bool,
}

pub fn compare_critical_points(a: Estimate, b: Estimate) -> Comparison {
    let difference = b.value - a.value;
    let combined_error = a.err.hypot(b.err);
    Comparison { difference, combined_error, significant: difference.abs() > 2.0 * combined_error }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<_> = (5..10).map(|e| (2f64.powi(e), 7.0 * 2f64.powi(e).powf(0.96), 0.1)).collect();
        let f = power_law_fit(&pts).unwrap();
        assert!((f.exponent - 0.96).abs() < 1e-6);
        assert!((f.amplitude - 7.0).abs() < 1e-6);
        let lin: Vec<_> = [8.0, 16.0, 32.0].iter().map(|&n| (n, n, 0.0)).collect();
        assert!((power_law_fit(&lin).unwrap().exponent - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law_within_two_sigma() {
        let mut hits = 0;
        for seed in 0..50 {
            let mut rng = stream(seed, &[1]);
            let pts: Vec<_> = (5..10)
                .map(|e| {
                    let n = 2f64.powi(e);
                    let v = 3.0 * n.powf(0.97);
                    let g: f64 = rng.sample(StandardNormal);
                    (n, v * (1.0 + 0.1 * g), 0.1 * v)
                })
                .collect();
            let f = power_law_fit(&pts).unwrap();
            if (f.exponent - 0.97).abs() < 2.0 * f.exponent_err {
                hits += 1;
            }
        }
        assert!(hits >= 42, "{hits}/50 within 2 sigma");
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(power_law_fit(&[(8.0, 1.0, 0.1), (16.0, 0.0, 0.1), (32.0, 2.0, 0.1)]), Err(Error::NonPositive));
        assert!(matches!(power_law_fit(&[(8.0, 1.0, 0.1), (16.0, 2.0, 0.1)]), Err(Error::TooFewSizes { .. })));
    }

    #[test]
    fn comparisons() {
        let a = Estimate::new(0.3, 0.01);
        let same = compare_critical_points(a, a);
        assert_eq!(same.difference, 0.0);
        assert!(!same.significant);
        let c = compare_critical_points(a, Estimate::new(0.35, 0.01));
        assert!((c.difference - 0.05).abs() < 1e-12);
        assert!((c.combined_error - 0.02f64.sqrt() * 0.1).abs() < 1e-12);
        assert!(c.significant);
    }
}
