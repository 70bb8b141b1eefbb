//! Counter-based seed derivation.
//!
//! Every random decision in a run (measurement placement, gate content,
//! per-trajectory streams) is derived from a master seed and a tuple of
//! integer coordinates, so any piece of a run can be regenerated in
//! isolation and the result never depends on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a seed together with a list of coordinates.
#[inline]
pub fn derive(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix(seed), |acc, &c| splitmix(acc ^ splitmix(c.wrapping_add(GOLDEN))))
}

/// Uniform draw in `[0, 1)` from a hashed counter (53 mantissa bits).
#[inline]
pub fn unit(seed: u64, coords: &[u64]) -> f64 {
    (derive(seed, coords) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A ChaCha stream keyed by `(seed, coords)`.
pub fn stream(seed: u64, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, coords))
}

/// Stream tags, so independent consumers of one seed never collide.
pub mod tag {
    pub const MEASURE: u64 = 0x6d65_6173;
    pub const OUTCOME: u64 = 0x6f75_7463;
    pub const GATE: u64 = 0x6761_7465;
    pub const MATCHING: u64 = 0x6d61_7463;
    pub const THERMALIZER: u64 = 0x7468_726d;
    pub const SWEEP: u64 = 0x7377_6570;
    pub const BOOTSTRAP: u64 = 0x626f_6f74;
    pub const TRAJECTORY: u64 = 0x7472_616a;
}
