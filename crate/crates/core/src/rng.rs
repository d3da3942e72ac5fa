//! Seeded random streams. Every stochastic routine takes an explicit `u64`
//! seed and derives per-task streams from it, so results never depend on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for task `index` of a run seeded with `seed` (`seed + index`).
pub fn task(seed: u64, index: usize) -> Rng {
    seeded(seed.wrapping_add(index as u64))
}

/// Well-separated child seed for trial-level loops, so that the per-start
/// streams `trial_seed + i` of consecutive trials do not overlap.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut z = seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_vec(rng: &mut Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| gaussian(rng)).collect()
}

/// Uniform point on the unit sphere in R^len.
pub fn unit_vec(rng: &mut Rng, len: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, len);
        let n = crate::linalg::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
