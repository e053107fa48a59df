//! Seeded random streams. All randomness in the crate flows through
//! ChaCha8 keyed by [`rand::SeedableRng::seed_from_u64`]; substreams use the
//! ChaCha stream selector so they never overlap.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in generated files.
pub const RNG_ALGORITHM: &str = "chacha8-seed_from_u64";

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `index` of `seed`.
pub fn substream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Derives the seed for child `index` of `seed`: the first word of
/// substream `index`.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index).next_u64()
}
