//! Seeding for every stochastic routine in the crate.
//!
//! All randomness flows through [`ChaCha8Rng`], a counter-based generator.
//! Sub-streams (replicates, simulation chunks, EM starts) get their own seed
//! from [`derive_seed`], so results never depend on the order in which
//! streams are consumed or on the number of worker threads.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Rows generated per independently seeded simulation chunk.
pub const CHUNK_ROWS: usize = 1 << 14;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream index.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(base) ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
