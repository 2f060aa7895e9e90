//! Per-replicate random streams.
//!
//! Every replicate draws from its own ChaCha8 stream. The 256-bit key is a
//! SplitMix64 expansion of the run seed and the 64-bit stream id is the
//! replicate index, so `(seed, replicate)` fixes the whole draw sequence no
//! matter which worker runs the replicate or in what order. This mapping is
//! part of the output contract: changing it changes every previously generated table.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator behind every replicate.
pub type ReplicateRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream for replicate `replicate` of a run seeded with `seed`.
pub fn derive_stream(seed: u64, replicate: u64) -> ReplicateRng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replicate);
    rng
}

/// Derives an independent seed for a named sub-computation, so that checks
/// sharing one user seed never share streams.
pub fn subseed(seed: u64, label: &str) -> u64 {
    let mut state = seed ^ 0xD1B5_4A32_D192_ED03;
    let mut acc = splitmix64(&mut state);
    for byte in label.bytes() {
        state ^= u64::from(byte).wrapping_mul(GOLDEN);
        acc ^= splitmix64(&mut state);
        acc = acc.rotate_left(17);
    }
    acc ^ splitmix64(&mut state)
}
