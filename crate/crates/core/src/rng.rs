//! Counter-based random streams. Each trajectory gets its own ChaCha stream
//! keyed by (seed, index), so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Stream = ChaCha8Rng;

/// Independent stream for trajectory `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a sub-seed so that different phases of one experiment (burn-in,
/// probes, divisor choice) never share a stream.
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn normal_pair<R: rand::Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    (StandardNormal.sample(rng), StandardNormal.sample(rng))
}
