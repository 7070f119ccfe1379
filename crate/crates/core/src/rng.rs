//! Seed derivation and the seeded uniform initializer shared by all solvers.
//!
//! Streams are ChaCha8, so a given seed yields the same draws on every platform.

use ndarray::Array2;
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::FactorPair;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `master`; order-sensitive and independent of any global state.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

/// Matrix with entries drawn from the open interval (0, 1).
pub fn uniform_open01(rng: &mut SeededRng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(Open01))
}

/// Strictly positive random starting point: `G` is `m×p`, `H` is `p×n`.
pub fn random_init(m: usize, p: usize, n: usize, seed: u64) -> FactorPair {
    let mut rng = rng_from_seed(seed);
    let g = uniform_open01(&mut rng, m, p);
    let h = uniform_open01(&mut rng, p, n);
    FactorPair { g, h }
}
