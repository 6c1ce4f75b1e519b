//! Bloom filter over cell addresses, with seeded double hashing.

use std::f64::consts::LOG2_E;

use crate::arena::Addr;
use crate::error::{Error, Result};
use crate::seed::{combine, mix64};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    bits: Vec<u64>,
    m: u64,
    hashes: u32,
    seed: u64,
}

impl BloomFilter {
    /// `m = ⌈|S| · lg(1/p) · log2 e⌉` bits and `⌈lg(1/p)⌉` hash functions.
    pub fn build(keys: &[Addr], p: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgs(format!(
                "false-positive rate {p} not in (0, 1)"
            )));
        }
        let lg = (1.0 / p).log2();
        let m = (keys.len() as f64 * lg * LOG2_E).ceil() as u64;
        let hashes = (lg.ceil() as u32).max(1);
        let mut f = Self {
            bits: vec![0; m.div_ceil(64) as usize],
            m,
            hashes,
            seed,
        };
        for &k in keys {
            let positions: Vec<u64> = f.positions(k).collect();
            for pos in positions {
                f.bits[(pos / 64) as usize] |= 1 << (pos % 64);
            }
        }
        Ok(f)
    }

    fn positions(&self, key: Addr) -> impl Iterator<Item = u64> + '_ {
        let h1 = combine(self.seed, key);
        let h2 = mix64(h1 ^ 0x9e37_79b9_7f4a_7c15) | 1;
        (0..self.hashes as u64).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % self.m)
    }

    pub fn contains(&self, key: Addr) -> bool {
        self.m > 0
            && self
                .positions(key)
                .all(|pos| self.bits[(pos / 64) as usize] >> (pos % 64) & 1 == 1)
    }

    /// Bits in the array.
    pub fn size_bits(&self) -> u64 {
        self.m
    }

    /// Serialized length: 64-bit length prefix plus the raw array.
    pub fn serialized_bits(&self) -> u64 {
        64 + self.m
    }

    pub fn hashes(&self) -> u32 {
        self.hashes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Length prefix followed by the array words; the last word is padded.
    pub fn to_words(&self) -> Vec<u64> {
        let mut w = vec![self.m];
        w.extend_from_slice(&self.bits);
        w
    }
}
