//! Seeded random streams.
//!
//! Every random decision in the pipeline flows from a single 64-bit run seed.
//! Independent consumers (data generation, initialisation of each model,
//! shuffling) draw from named sub-streams so that adding a consumer never
//! perturbs the others.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Seed of the sub-stream `name` under `seed`.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a over the name, folded through splitmix64.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h))
}

pub fn stream(seed: u64, name: &str) -> Rng {
    seeded(derive_seed(seed, name))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
