//! Hex record codec.
//!
//! +1 is bit 1 and -1 is bit 0. Bits are packed MSB-first and the string is
//! left-padded with zero bits to a whole number of hex digits, so a length-5
//! sequence `+++-+` (bits `11101`) encodes as `1D`. Decoding needs the
//! target length because the padding bits are indistinguishable from
//! leading -1 elements.

use crate::error::{Error, Result};
use crate::sequence::BinarySequence;

const DIGITS: &[u8; 16] = b"0123456789ABCDEF";

pub fn hex_encode(seq: &BinarySequence) -> String {
    let len = seq.len();
    let digits = len.div_ceil(4);
    let pad = digits * 4 - len;
    let bit = |pos: usize| -> u8 {
        // pos counts from the first (most significant) padded bit
        if pos < pad {
            0
        } else {
            (seq.signs()[pos - pad] > 0) as u8
        }
    };
    (0..digits)
        .map(|d| {
            let v = (0..4).fold(0u8, |acc, b| (acc << 1) | bit(d * 4 + b));
            DIGITS[v as usize] as char
        })
        .collect()
}

pub fn hex_decode(hex: &str, len: usize) -> Result<BinarySequence> {
    if len < 2 {
        return Err(Error::InvalidLength(len));
    }
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        let v = c.to_digit(16).ok_or(Error::HexDigit(c))?;
        bits.extend((0..4).rev().map(|b| v >> b & 1 == 1));
    }
    if len > bits.len() {
        return Err(Error::HexTooShort {
            length: len,
            available: bits.len(),
        });
    }
    let (high, body) = bits.split_at(bits.len() - len);
    if high.iter().any(|&b| b) {
        return Err(Error::HexHighBits(len));
    }
    BinarySequence::from_bits(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn five_element_example() {
        let s: BinarySequence = "+++-+".parse().unwrap();
        assert_eq!(hex_encode(&s), "1D");
        assert_eq!(hex_decode("1D", 5).unwrap(), s);
        assert_eq!(hex_decode("1d", 5).unwrap(), s);
        assert_eq!(hex_decode("001D", 5).unwrap(), s);
    }

    #[test]
    fn decode_errors() {
        assert_eq!(hex_decode("0", 1), Err(Error::InvalidLength(1)));
        assert_eq!(hex_decode("1G", 5), Err(Error::HexDigit('G')));
        assert_eq!(
            hex_decode("1D", 9),
            Err(Error::HexTooShort {
                length: 9,
                available: 8
            })
        );
        assert_eq!(hex_decode("3D", 5), Err(Error::HexHighBits(5)));
        // all -1 is legal: only padding zeros above the length
        assert_eq!(hex_decode("00", 5).unwrap(), "-----".parse().unwrap());
    }

    #[test]
    fn full_digit_lengths() {
        let s: BinarySequence = "++++----".parse().unwrap();
        assert_eq!(hex_encode(&s), "F0");
    }

    proptest! {
        #[test]
        fn roundtrip(bits in prop::collection::vec(any::<bool>(), 2..600)) {
            let s = BinarySequence::from_bits(&bits).unwrap();
            let h = hex_encode(&s);
            prop_assert_eq!(h.len(), s.len().div_ceil(4));
            prop_assert!(h.chars().all(|c| c.is_ascii_digit() || c.is_ascii_uppercase()));
            prop_assert_eq!(hex_decode(&h, s.len()).unwrap(), s);
        }
    }
}
