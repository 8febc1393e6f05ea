//! Counter-based RNG derivation.
//!
//! Every random quantity in a trial is drawn from a ChaCha stream keyed by
//! `(seed, tag, index)`, so any frame or trial can be regenerated on its own
//! and parallel execution stays bit-exact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags. Distinct tags never share key material.
pub mod tag {
    pub const TRIAL: u64 = 0x5452_4941_4c00_0001;
    pub const TX_FRAME: u64 = 0x5458_4652_4d00_0002;
    pub const NOISE_FRAME: u64 = 0x4e4f_4953_4500_0003;
    pub const CHANNEL: u64 = 0x4348_414e_4e00_0004;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn derive_rng(seed: u64, tag: u64, index: u64) -> SimRng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed ^ splitmix64(tag));
    state = splitmix64(state ^ splitmix64(index.wrapping_add(tag)));
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    SimRng::from_seed(key)
}

/// Derives a child seed, e.g. the per-trial seed of a campaign.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ tag) ^ index)
}
