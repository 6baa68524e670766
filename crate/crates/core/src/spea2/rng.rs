use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const INIT_SLOT: u32 = u32::MAX;
pub(crate) const MATING_SLOT: u32 = u32::MAX - 1;

/// Independent ChaCha8 stream for `(seed, iteration, slot)`.
///
/// Streams never depend on evaluation order, so results are identical
/// whether candidates are evaluated sequentially or in parallel.
pub fn stream_rng(seed: u64, iteration: usize, slot: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((iteration as u64) << 32) | u64::from(slot));
    rng
}

/// SplitMix64 mix of a master seed and an index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
