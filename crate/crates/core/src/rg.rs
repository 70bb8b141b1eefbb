//! Block-decimation recursion for bond percolation on the complete PWR2
//! network.
//!
//! A bond of the coarse network survives with probability `q_bond(q)`,
//! two coarse bonds in series-parallel form a ribbon `Q_ribbon`, and two
//! ribbons in parallel give the renormalized occupation `R(q)`.

use serde::Serialize;

use crate::error::{Error, Result};

fn check(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::BadProbability(q))
    }
}

pub fn q_bond(q: f64) -> Result<f64> {
    check(q)?;
    let r = 1.0 - q;
    Ok(q.powi(4) + 4.0 * q.powi(3) * r + 4.0 * q * q * r * r)
}

pub fn q_ribbon(qb: f64) -> Result<f64> {
    check(qb)?;
    let r = 1.0 - qb;
    Ok(qb.powi(4) + 4.0 * qb.powi(3) * r + 2.0 * qb * qb * r * r)
}

pub fn rg_step(q: f64) -> Result<f64> {
    let big = q_ribbon(q_bond(q)?)?;
    Ok(big * big + 2.0 * big * (1.0 - big))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    /// Nearby `q` flows away from the fixed point (critical point).
    Unstable,
    Stable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub q_star: f64,
    pub p_star: f64,
    pub stability: Stability,
}

/// Nontrivial root of `R(q) = q` by bisection to `tol`.
pub fn fixed_point_with(tol: f64) -> Result<FixedPoint> {
    let f = |q: f64| rg_step(q).map(|r| r - q);
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo * fhi > 0.0 {
        return Err(Error::NoSignChange);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let q_star = 0.5 * (lo + hi);
    let below = f(q_star - 1e-3)?;
    let above = f(q_star + 1e-3)?;
    let stability = if below < 0.0 && above > 0.0 { Stability::Unstable } else { Stability::Stable };
    Ok(FixedPoint { q_star, p_star: 1.0 - q_star, stability })
}

pub fn fixed_point() -> Result<FixedPoint> {
    fixed_point_with(1e-12)
}
