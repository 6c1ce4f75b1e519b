//! Seed expansion. Every artifact records a single 64-bit seed; generators
//! derive independent streams from it by label so adding a new consumer never
//! perturbs the existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One step of the splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine a seed with a value into a new seed.
pub fn combine(seed: u64, value: u64) -> u64 {
    mix64(seed ^ mix64(value))
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a; only needs to be stable, not strong.
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

/// A named, splittable seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn derive(&self, label: &str) -> SeedStream {
        SeedStream {
            seed: combine(self.seed, label_hash(label)),
        }
    }

    pub fn derive_index(&self, label: &str, index: u64) -> SeedStream {
        SeedStream {
            seed: combine(combine(self.seed, label_hash(label)), index),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}
