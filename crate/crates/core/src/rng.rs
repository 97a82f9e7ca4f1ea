//! Seeded random streams. All randomness in the engine flows through
//! [`stream_rng`] so results never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type EngineRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> EngineRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent sub-stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> EngineRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer, used to derive per-run seeds from a base seed and an index path.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
