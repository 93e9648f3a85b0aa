//! Counter-based random substreams.
//!
//! Every random draw in a simulation comes from a ChaCha8 generator keyed by
//! `(seed, replication, step, agent)`. Draws therefore do not depend on
//! evaluation order, so parallel and sequential runs produce identical traces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for all simulation randomness.
pub type StreamRng = ChaCha8Rng;

/// Agent slot reserved for draws shared by the whole population in one step
/// (the broadcast interval signal).
pub const BROADCAST: u64 = u64::MAX;

/// Agent slot reserved for per-replication draws (e.g. i.i.d. risk levels).
pub const REPLICATION: u64 = u64::MAX - 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for one `(seed, replication, step, agent)` cell.
pub fn substream(seed: u64, replication: u64, step: u64, agent: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut h = splitmix64(seed);
    for (chunk, word) in key
        .chunks_exact_mut(8)
        .zip([replication, step, agent, 0x6465_7379_6e63_0001])
    {
        h = splitmix64(h ^ word);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
