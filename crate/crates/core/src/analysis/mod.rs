//! Finite-size scaling: crossing points, scaling collapses and power laws.

mod collapse;
mod crossing;
mod fit;
mod pchip;

pub use collapse::{collapse_cost, collapse_fit, Ansatz, FitConfig, ScalingFit};
pub use crossing::{crossing_point, crossing_point_scaled, Crossing, PairCrossing};
pub use fit::{compare_critical_points, power_law_fit, Comparison, PowerLaw};
pub use pchip::Pchip;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::Model;
use crate::error::{Error, Result};
use crate::percolation::CanonicalCurve;

/// Default bootstrap replicate count.
pub const DEFAULT_BOOT: usize = 5000;

/// One observable sampled at one system size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableCurve {
    pub n: usize,
    pub k: usize,
    pub model: Model,
    pub observable: String,
    pub p: Vec<f64>,
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl ObservableCurve {
    pub fn new(
        n: usize,
        k: usize,
        model: Model,
        observable: impl Into<String>,
        p: Vec<f64>,
        value: Vec<f64>,
        stderr: Vec<f64>,
    ) -> Result<Self> {
        if p.len() != value.len() || p.len() != stderr.len() {
            return Err(Error::BadCurve("column lengths differ".into()));
        }
        if p.len() < 2 {
            return Err(Error::BadCurve("need at least two samples".into()));
        }
        if p.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadCurve("p must be strictly increasing".into()));
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadCurve("non-finite value".into()));
        }
        if stderr.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::BadCurve("stderr must be positive".into()));
        }
        Ok(Self { n, k, model, observable: observable.into(), p, value, stderr })
    }

    /// Wrap a canonical percolation curve, raising every stderr to at
    /// least `floor`.
    pub fn from_canonical(
        n: usize,
        k: usize,
        model: Model,
        observable: impl Into<String>,
        curve: &CanonicalCurve,
        floor: f64,
    ) -> Result<Self> {
        let stderr = curve.stderr.iter().map(|s| s.max(floor)).collect();
        Self::new(n, k, model, observable, curve.p.clone(), curve.value.clone(), stderr)
    }

    /// Samples with `lo <= p <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> Result<Self> {
        let keep: Vec<usize> = (0..self.p.len()).filter(|&i| self.p[i] >= lo && self.p[i] <= hi).collect();
        let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self::new(self.n, self.k, self.model, self.observable.clone(), pick(&self.p), pick(&self.value), pick(&self.stderr))
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let s = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
        Self::new(self.n, self.k, self.model, self.observable.clone(), self.p.clone(), s(&self.value), s(&self.stderr))
    }

    /// Values with Gaussian noise of `scale` standard errors added.
    pub(crate) fn perturbed<R: Rng>(&self, scale: f64, rng: &mut R) -> Vec<f64> {
        self.value
            .iter()
            .zip(&self.stderr)
            .map(|(v, s)| {
                let g: f64 = rng.sample(StandardNormal);
                v + scale * s * g
            })
            .collect()
    }
}

/// Which sizes may enter a finite-size analysis at nonlocality `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeFilter {
    /// `N > 2^k`.
    #[default]
    AboveBlock,
    /// `N >= 2^(k+2)`.
    Strict,
    None,
}

impl SizeFilter {
    pub fn admits(self, n: usize, k: usize) -> bool {
        match self {
            SizeFilter::AboveBlock => k >= usize::BITS as usize || n > 1 << k,
            SizeFilter::Strict => k + 2 < usize::BITS as usize && n >= 1 << (k + 2),
            SizeFilter::None => true,
        }
    }

    pub fn apply(self, curves: &[ObservableCurve]) -> Vec<ObservableCurve> {
        curves.iter().filter(|c| self.admits(c.n, c.k)).cloned().collect()
    }
}

/// A point estimate with a one-sigma error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub fn new(value: f64, err: f64) -> Self {
        Self { value, err }
    }
}

/// Cut every curve at the minimum of the largest size's curve, keeping the
/// falling side of dip-shaped curves such as the Binder cumulant of the
/// largest cluster.
pub fn before_largest_minimum(curves: &[ObservableCurve]) -> Result<Vec<ObservableCurve>> {
    let cs = sorted_by_size(curves, 1)?;
    let big = cs[cs.len() - 1];
    let i_min = (0..big.p.len()).min_by(|&a, &b| big.value[a].total_cmp(&big.value[b])).unwrap_or(0);
    let p_cut = big.p[i_min];
    curves.iter().map(|c| c.window(f64::NEG_INFINITY, p_cut)).collect()
}

/// Sort curves by size and reject duplicate sizes.
pub(crate) fn sorted_by_size(curves: &[ObservableCurve], need: usize) -> Result<Vec<&ObservableCurve>> {
    let mut v: Vec<&ObservableCurve> = curves.iter().collect();
    v.sort_by_key(|c| c.n);
    if v.windows(2).any(|w| w[0].n == w[1].n) {
        return Err(Error::BadCurve("duplicate system size".into()));
    }
    if v.len() < need {
        return Err(Error::TooFewSizes { need, got: v.len() });
    }
    Ok(v)
}
