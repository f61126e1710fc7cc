//! Seed derivation for independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep the sub-streams of one master seed apart.
pub mod stream {
    pub const TREE: u64 = 0x7472_6565;
    pub const STRINGENT_ONE: u64 = 0x7374_7231;
    pub const STRINGENT_TWO: u64 = 0x7374_7232;
    pub const PARTITION: u64 = 0x7061_7274;
    pub const BOOST: u64 = 0x626f_6f73;
    pub const REPETITION: u64 = 0x7265_7073;
    pub const GRID: u64 = 0x6772_6964;
    pub const TRAIN: u64 = 0x7472_6e64;
    pub const TEST: u64 = 0x7465_7374;
    pub const FOREST: u64 = 0x666f_7273;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a stream tag and an index into a new 64-bit seed.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    rng_from(derive_seed(seed, tag, index))
}
