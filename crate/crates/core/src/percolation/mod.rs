//! Haar-limit bond percolation on the circuit network, solved for all
//! occupations at once with a Newman-Ziff sweep.
//!
//! Gates become vertices and qubit worldline segments become bonds; a
//! measurement cuts the segment it sits on. The occupation probability of a
//! cuttable bond is `q = 1 - p`.

mod canonical;
mod network;
mod sweep;
mod union_find;

pub use canonical::{
    binder, binder_cumulant, binomial_weights, convolve, convolve_canonical, spanning_probability, susceptibility,
    susceptibility_peak, CanonicalCurve, Moment, Peak,
};
pub use network::{build_network, Bond, PercolationNetwork};
pub use sweep::{direct_fixed_p, newman_ziff_sweep, newman_ziff_sweep_tracked, DirectEstimate, SweepResult};
