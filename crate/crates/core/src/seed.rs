//! Labeled sub-seed derivation.
//!
//! Every random stream in a run is derived from one user seed plus a label
//! (`"split"`, `"init-main"`, `"batch"`, ...), so that adding a consumer never
//! perturbs the streams of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed for a named role.
pub fn derive(seed: u64, label: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(seed ^ splitmix64(h))
}

/// Derive a sub-seed for the `index`-th item of a named stream (batch, trial, ...).
pub fn derive_indexed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive(seed, label) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(seed: u64, label: &str) -> Rng {
    rng(derive(seed, label))
}
