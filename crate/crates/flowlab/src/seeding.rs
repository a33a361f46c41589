//! Deterministic seed derivation.
//!
//! All randomness in the library flows from one global seed through named
//! sub-seeds, so that independent components (task construction, parameter
//! init, shuffling, Monte-Carlo chunks) draw from independent streams and
//! any one of them can be reproduced in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche, stable across platforms.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over a byte string.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive a named sub-seed from a global seed and a purpose string.
pub fn derive_seed(global: u64, purpose: &str) -> u64 {
    splitmix64(global ^ fnv1a(purpose.as_bytes()))
}

/// Sub-seed for one fixed-size chunk of a chunked sampler.
pub fn chunk_seed(seed: u64, chunk: u64) -> u64 {
    splitmix64(seed ^ splitmix64(chunk.wrapping_add(0x5bd1_e995)))
}

/// Seeded RNG for a named purpose.
pub fn rng_for(global: u64, purpose: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global, purpose))
}

/// Seeded RNG directly from a raw seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
