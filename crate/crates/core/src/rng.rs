//! Seeded random streams.
//!
//! Every run is driven by a single 64-bit seed. Each purpose draws from its own
//! ChaCha8 stream: the generator is seeded with `seed_from_u64(seed)` and the
//! stream number is set to the purpose id below. Streams never overlap, so adding
//! draws for one purpose leaves the others untouched, and results are identical
//! across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    Requests = 2,
    Rounding = 3,
    Placement = 4,
    MonteCarlo = 5,
}

pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Derives the seed of the `index`-th replication from a base seed.
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
