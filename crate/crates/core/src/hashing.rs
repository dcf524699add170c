//! 64-bit hashing helpers shared by the Bloom filter and the search frontier.

/// SplitMix64 step, used both as a mixer and to fill tabulation tables.
#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn hash_bytes(bytes: &[u8], seed: u64) -> u64 {
    let mut h = splitmix64(seed ^ (bytes.len() as u64).wrapping_mul(0xA076_1D64_78BD_642F));
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        h = splitmix64(h ^ u64::from_le_bytes(word));
    }
    h
}

/// Two independent hashes of the same byte string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashPair(pub u64, pub u64);

pub fn hash_pair(bytes: &[u8]) -> HashPair {
    HashPair(
        hash_bytes(bytes, 0x5EED_0001),
        hash_bytes(bytes, 0x5EED_0002),
    )
}

/// Canonical byte view of a sign vector: one byte per element, 1 for +1.
pub fn sign_bytes(signs: &[i8]) -> Vec<u8> {
    signs.iter().map(|&s| (s > 0) as u8).collect()
}

/// Tabulation (Zobrist) hash over sign vectors: the XOR of one random key per
/// +1 position. Negating position `i` toggles `key(i)`, so a flip updates the
/// hash in O(1).
#[derive(Clone, Debug)]
pub struct ZobristTable {
    keys: Vec<u64>,
}

impl ZobristTable {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut state = splitmix64(seed);
        let keys = (0..len)
            .map(|_| {
                state = splitmix64(state);
                state
            })
            .collect();
        Self { keys }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn hash(&self, signs: &[i8]) -> u64 {
        debug_assert_eq!(signs.len(), self.keys.len());
        signs
            .iter()
            .zip(&self.keys)
            .filter(|(&s, _)| s > 0)
            .fold(0, |h, (_, &k)| h ^ k)
    }

    #[inline]
    pub fn key(&self, i: usize) -> u64 {
        self.keys[i]
    }
}

/// A pair of tabulation tables producing a [`HashPair`] with O(1) flips.
#[derive(Clone, Debug)]
pub struct ZobristPair {
    first: ZobristTable,
    second: ZobristTable,
}

impl ZobristPair {
    pub fn new(len: usize) -> Self {
        Self {
            first: ZobristTable::new(len, 0xB10F_0001),
            second: ZobristTable::new(len, 0xB10F_0002),
        }
    }

    pub fn hash(&self, signs: &[i8]) -> HashPair {
        HashPair(self.first.hash(signs), self.second.hash(signs))
    }

    #[inline]
    pub fn toggled(&self, h: HashPair, i: usize) -> HashPair {
        HashPair(h.0 ^ self.first.key(i), h.1 ^ self.second.key(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zobrist_flip_is_incremental() {
        let t = ZobristTable::new(10, 3);
        let mut s = vec![1i8, -1, 1, 1, -1, -1, 1, -1, 1, 1];
        let h = t.hash(&s);
        s[4] = 1;
        assert_eq!(t.hash(&s), h ^ t.key(4));
    }

    #[test]
    fn byte_hashes_differ() {
        let a = hash_pair(&[1, 0, 1]);
        let b = hash_pair(&[1, 0, 0]);
        assert_ne!(a, b);
        assert_ne!(a.0, a.1);
        assert_ne!(hash_bytes(&[0], 1), hash_bytes(&[0, 0], 1));
    }
}
