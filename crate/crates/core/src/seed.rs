//! Seed derivation for reproducible, order-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `(base, stream, index)`.
pub fn derive(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ stream.rotate_left(17)) ^ index)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub mod stream {
    pub const GOAL: u64 = 1;
    pub const CHANNEL: u64 = 2;
    pub const POLICY: u64 = 3;
    pub const TRAIN: u64 = 4;
    pub const EVAL: u64 = 5;
    pub const SPLIT: u64 = 6;
    pub const REPLAY: u64 = 7;
    pub const CORPUS: u64 = 8;
    pub const SL: u64 = 9;
}
