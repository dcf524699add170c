//! Bloom filter used as the visited set of a self-avoiding walk.
//!
//! Bit positions come from double hashing, `h1 + i·h2 mod m` for
//! `i = 0..k`. Walks feed precomputed [`HashPair`]s from a tabulation table;
//! the byte-slice entry points hash with [`hash_pair`].

use crate::hashing::{hash_pair, HashPair};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomFilter {
    bits: Vec<u64>,
    num_bits: u64,
    hash_count: u32,
    inserted: u64,
}

impl BloomFilter {
    pub fn new(num_bits: u64, hash_count: u32) -> Self {
        let num_bits = num_bits.max(64);
        let hash_count = hash_count.max(1);
        Self {
            bits: vec![0; num_bits.div_ceil(64) as usize],
            num_bits,
            hash_count,
            inserted: 0,
        }
    }

    /// Sizes the filter so that `capacity` insertions give a false-positive
    /// rate of at most `fpr`: `m = -n ln p / ln² 2`, `k = round(m/n · ln 2)`.
    pub fn with_capacity(capacity: u64, fpr: f64) -> Self {
        let n = capacity.max(1) as f64;
        let ln2 = std::f64::consts::LN_2;
        let m = (-n * fpr.ln() / (ln2 * ln2)).ceil().max(64.0);
        let k = (m / n * ln2).round().max(1.0);
        Self::new(m as u64, k as u32)
    }

    pub fn num_bits(&self) -> u64 {
        self.num_bits
    }

    pub fn hash_count(&self) -> u32 {
        self.hash_count
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn bits(&self) -> &[u64] {
        &self.bits
    }

    /// Analytic false-positive rate after `n` insertions, `(1 - e^{-kn/m})^k`.
    pub fn expected_fpr(&self, n: u64) -> f64 {
        let k = self.hash_count as f64;
        (1.0 - (-k * n as f64 / self.num_bits as f64).exp()).powf(k)
    }

    pub fn clear(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = 0);
        self.inserted = 0;
    }

    pub fn insert(&mut self, item: &[u8]) {
        self.insert_pair(hash_pair(item));
    }

    pub fn maybe_contains(&self, item: &[u8]) -> bool {
        self.contains_pair(hash_pair(item))
    }

    #[inline]
    pub fn insert_pair(&mut self, h: HashPair) {
        for i in 0..self.hash_count {
            let bit = self.position(h, i);
            self.bits[(bit / 64) as usize] |= 1 << (bit % 64);
        }
        self.inserted += 1;
    }

    #[inline]
    pub fn contains_pair(&self, h: HashPair) -> bool {
        (0..self.hash_count).all(|i| {
            let bit = self.position(h, i);
            self.bits[(bit / 64) as usize] >> (bit % 64) & 1 == 1
        })
    }

    #[inline]
    fn position(&self, h: HashPair, i: u32) -> u64 {
        h.0.wrapping_add((i as u64).wrapping_mul(h.1 | 1)) % self.num_bits
    }

    #[cfg(test)]
    fn saturate(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = u64::MAX);
    }
}
