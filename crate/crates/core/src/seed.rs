//! Deterministic seed derivation.
//!
//! Every stochastic component takes a root seed plus a stream path (a short
//! list of integer tags) and derives an independent ChaCha stream from it.
//! Parallel loops hand each task its own derived stream, so results do not
//! depend on scheduling, and adding a new consumer never perturbs existing
//! streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed and a stream path.
pub fn derive_seed(root: u64, stream: &[u64]) -> u64 {
    let mut state = splitmix64(root);
    for &tag in stream {
        state = splitmix64(state ^ tag.wrapping_mul(0xA24B_AED4_963E_E407));
    }
    state
}

/// A ChaCha stream for the given root seed and stream path.
pub fn derived_rng(root: u64, stream: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stream))
}
