//! Deterministic seed derivation. Every random stream in the simulator is a
//! ChaCha8 generator keyed by a seed derived from the experiment seed and
//! a fixed stream tag, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with an ordered list of stream coordinates.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix(base), |acc, p| splitmix(acc ^ splitmix(*p)))
}

// Stream tags.
pub const INIT: u64 = 1;
pub const NOISE: u64 = 2;
pub const SPLIT: u64 = 3;
pub const TRAIN: u64 = 4;
pub const CDIV: u64 = 5;
pub const LSH: u64 = 6;
pub const SAMPLE: u64 = 7;
pub const HYPERNET: u64 = 8;
pub const VALIDATION_BATCH: u64 = 9;
pub const TEST_SET: u64 = 10;
pub const PARTITION: u64 = 11;
pub const DATA: u64 = 12;
