use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives an independent RNG stream from a base seed and a stream index.
///
/// Trials fanned out across workers each call this with their own index, so
/// results are reproducible regardless of scheduling order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    // SplitMix64 finalizer decorrelates nearby (seed, stream) pairs.
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&z.to_le_bytes());
    key[8..16].copy_from_slice(&seed.to_le_bytes());
    key[16..24].copy_from_slice(&stream.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
