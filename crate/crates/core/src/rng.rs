//! Random streams.
//!
//! Every stochastic component draws from [`ChainRng`], a ChaCha stream
//! cipher with 8 rounds keyed from a 64-bit seed. The generator is
//! counter-based with published constants, so a seed reproduces the same
//! stream on every platform. Gaussian variates come from the ziggurat
//! sampler in `rand_distr`, which is a deterministic function of the stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for the `index`-th member of a batch (chain, replicate) derived
/// from a master seed.
pub fn derive_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add(index as u64)
}
