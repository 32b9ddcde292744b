//! Seeded random streams.
//!
//! All sampling uses ChaCha8, a counter-based generator. A 64-bit seed
//! selects the key and a [`Stream`] selects the ChaCha stream id, so labels,
//! noise, edges and side information drawn from the same seed never share
//! random numbers and can be regenerated independently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Labels = 1,
    Noise = 2,
    Edges = 3,
    SideInfo = 4,
    Start = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Derive the seed of replicate `index` from a master seed (SplitMix64
/// finalizer), so replicates are independent of scheduling order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
