//! Deterministic seeding. Every sample draws from its own ChaCha stream so
//! results do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

/// Seed domain for per-`mon` collapses in the VM.
pub const DOMAIN_MON: u64 = 0x6d6f6e;
/// Seed domain for the terminal ensemble drawn at `halt`.
pub const DOMAIN_HALT: u64 = 0x68616c74;
/// Seed domain for per-outcome branches in resample-collapse runs.
pub const DOMAIN_BRANCH: u64 = 0x6272616e;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a domain tag and an index into a child seed.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(domain)) ^ index)
}

/// Generator for sample `index` of an ensemble seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
