//! Retrieval dictionary: one payload bit per key, read as the XOR of three
//! table bits. Built by peeling the 3-uniform hypergraph of key positions;
//! an unpeelable graph is retried with a fresh seed.

use crate::arena::Addr;
use crate::error::{Error, Result};
use crate::seed::combine;

/// Table bits per key.
pub const LOAD: f64 = 1.23;
pub const MAX_ATTEMPTS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalDictionary {
    table: Vec<u64>,
    block: u64,
    seed: u64,
}

impl RetrievalDictionary {
    /// Keys must be distinct.
    pub fn build(pairs: &[(Addr, bool)], seed: u64) -> Result<Self> {
        let block = if pairs.is_empty() {
            0
        } else {
            (LOAD * pairs.len() as f64 / 3.0).ceil() as u64 + 1
        };
        for attempt in 0..MAX_ATTEMPTS {
            let mut d = Self {
                table: vec![0; (3 * block).div_ceil(64) as usize],
                block,
                seed: combine(seed, attempt as u64),
            };
            if d.assign(pairs) {
                return Ok(d);
            }
        }
        Err(Error::BuildFailure(MAX_ATTEMPTS))
    }

    fn positions(&self, key: Addr) -> [u64; 3] {
        let h = combine(self.seed, key);
        let g = combine(h, 0x5851_f42d_4c95_7f2d);
        [
            h % self.block,
            self.block + (h >> 32 ^ g) % self.block,
            2 * self.block + g % self.block,
        ]
    }

    fn bit(&self, pos: u64) -> bool {
        self.table[(pos / 64) as usize] >> (pos % 64) & 1 == 1
    }

    fn flip(&mut self, pos: u64) {
        self.table[(pos / 64) as usize] ^= 1 << (pos % 64);
    }

    fn assign(&mut self, pairs: &[(Addr, bool)]) -> bool {
        let m = (3 * self.block) as usize;
        let edges: Vec<[u64; 3]> = pairs.iter().map(|&(k, _)| self.positions(k)).collect();
        let mut degree = vec![0u32; m];
        let mut xor_edges = vec![0usize; m];
        for (e, ps) in edges.iter().enumerate() {
            for &p in ps {
                degree[p as usize] += 1;
                xor_edges[p as usize] ^= e;
            }
        }
        let mut stack: Vec<usize> = (0..m).filter(|&p| degree[p] == 1).collect();
        let mut order: Vec<(usize, u64)> = Vec::with_capacity(pairs.len());
        while let Some(p) = stack.pop() {
            if degree[p] != 1 {
                continue;
            }
            let e = xor_edges[p];
            order.push((e, p as u64));
            for &q in &edges[e] {
                let q = q as usize;
                degree[q] -= 1;
                xor_edges[q] ^= e;
                if degree[q] == 1 {
                    stack.push(q);
                }
            }
        }
        if order.len() != pairs.len() {
            return false;
        }
        for &(e, free) in order.iter().rev() {
            let want = pairs[e].1;
            let have = edges[e].iter().fold(false, |acc, &q| acc ^ self.bit(q));
            if have != want {
                self.flip(free);
            }
        }
        true
    }

    /// The stored bit for members; an arbitrary bit otherwise.
    pub fn get(&self, key: Addr) -> bool {
        if self.block == 0 {
            return false;
        }
        self.positions(key)
            .iter()
            .fold(false, |acc, &p| acc ^ self.bit(p))
    }

    /// Serialized length: 64-bit length prefix plus the table.
    pub fn size_bits(&self) -> u64 {
        64 + 3 * self.block
    }

    /// Flip one table bit; for adversarial tests.
    pub fn flip_table_bit(&mut self, index: u64) {
        if self.block > 0 {
            self.flip(index % (3 * self.block));
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_keys() {
        let d = RetrievalDictionary::build(&[(5, false), (9, true)], 0).unwrap();
        assert!(!d.get(5));
        assert!(d.get(9));
        let _ = d.get(1234);
    }

    #[test]
    fn members_are_exact_and_size_is_linear() {
        for seed in 0..5 {
            let pairs: Vec<(u64, bool)> = (0..5000u64)
                .map(|i| (crate::seed::mix64(i ^ seed << 32), i % 3 == 0))
                .collect();
            let d = RetrievalDictionary::build(&pairs, seed).unwrap();
            assert!(pairs.iter().all(|&(k, b)| d.get(k) == b));
            assert!(d.size_bits() as f64 <= 1.3 * 1.23 * 5000.0 + 64.0);
        }
    }

    #[test]
    fn empty_dictionary() {
        let d = RetrievalDictionary::build(&[], 3).unwrap();
        assert_eq!(d.size_bits(), 64);
        assert!(!d.get(0));
    }
}
