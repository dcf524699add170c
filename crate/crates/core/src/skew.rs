//! Skew-symmetric sequences of odd length `L = 2k + 1`.
//!
//! A skew-symmetric sequence is fixed by its first `k + 1` elements. With
//! 0-based indexing and center `c = k`, the expansion rule is
//! `s[c + i] = (-1)^i · s[c - i]` for `i = 1..=k`. Every odd-lag correlation
//! of such a sequence is zero, and a flip of half position `h < k` negates
//! both `h` and its mirror `2k - h` so the symmetry is kept.
//!
//! Half positions are addressed with 1-based indices `1..=k+1` in the public
//! flip API, matching the usual notation; index `k + 1` is the center.

use rand::Rng;

use crate::error::{Error, Result};
use crate::sequence::{self, autocorrelation, BinarySequence, CorrelationState, FlipDelta};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SkewHalf {
    half: Vec<i8>,
}

impl SkewHalf {
    /// Builds a half `s_1..s_{k+1}` for a sequence of length `2·len - 1`.
    pub fn new(half: Vec<i8>) -> Result<Self> {
        if half.len() < 2 {
            return Err(Error::InvalidLength((2 * half.len()).saturating_sub(1)));
        }
        if let Some((position, &value)) = half.iter().enumerate().find(|(_, &s)| s != 1 && s != -1)
        {
            return Err(Error::InvalidElement {
                position,
                value: value as i64,
            });
        }
        Ok(Self { half })
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        check_odd_length(len)?;
        Self::new(
            (0..len.div_ceil(2))
                .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                .collect(),
        )
    }

    /// Extracts the half of a skew-symmetric sequence, or `None` if the
    /// sequence has even length or breaks the symmetry.
    pub fn from_sequence(seq: &BinarySequence) -> Option<Self> {
        if is_skew_symmetric(seq) {
            Some(Self {
                half: seq.signs()[..seq.len().div_ceil(2)].to_vec(),
            })
        } else {
            None
        }
    }

    /// Full sequence length `L = 2k + 1`.
    pub fn len(&self) -> usize {
        2 * self.half.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k(&self) -> usize {
        self.half.len() - 1
    }

    pub fn signs(&self) -> &[i8] {
        &self.half
    }

    pub fn expand(&self) -> BinarySequence {
        BinarySequence::from_signs_unchecked(expand_signs(&self.half))
    }

    /// Full-sequence positions touched by flipping 1-based half index `j`.
    pub fn mirror_positions(&self, j: usize) -> Result<(usize, Option<usize>)> {
        if j == 0 || j > self.half.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                bound: self.half.len() + 1,
            });
        }
        let h = j - 1;
        let k = self.k();
        Ok((h, (h < k).then(|| 2 * k - h)))
    }

    pub(crate) fn flip_half(&mut self, h: usize) {
        self.half[h] = -self.half[h];
    }
}

fn check_odd_length(len: usize) -> Result<()> {
    if len < 3 || len.is_multiple_of(2) {
        return Err(Error::InvalidLength(len));
    }
    Ok(())
}

fn expand_signs(half: &[i8]) -> Vec<i8> {
    let k = half.len() - 1;
    let mut full = vec![0i8; 2 * k + 1];
    full[..=k].copy_from_slice(half);
    for i in 1..=k {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        full[k + i] = sign * full[k - i];
    }
    full
}

pub fn expand_skew(half: &SkewHalf) -> BinarySequence {
    half.expand()
}

pub fn is_skew_symmetric(seq: &BinarySequence) -> bool {
    let n = seq.len();
    if n.is_multiple_of(2) {
        return false;
    }
    let s = seq.signs();
    let k = n / 2;
    (1..=k).all(|i| s[k + i] == if i % 2 == 0 { s[k - i] } else { -s[k - i] })
}

/// Energy change of flipping half index `j` (1-based), given the correlation
/// state of `half.expand()`.
pub fn skew_flip_delta(half: &SkewHalf, state: &CorrelationState, j: usize) -> Result<FlipDelta> {
    let (a, b) = half.mirror_positions(j)?;
    let full = expand_signs(&half.half);
    Ok(FlipDelta {
        index: j,
        delta: pair_flip_delta(&full, state.correlations(), a, b),
    })
}

/// Exact delta of negating `a` and, if present, `b` together. Only even lags
/// are visited: the input must be skew-symmetric and `b` the mirror of `a`,
/// which keeps every odd-lag correlation at zero.
fn pair_flip_delta(s: &[i8], corr: &[i32], a: usize, b: Option<usize>) -> i64 {
    let n = s.len();
    let mut delta = 0i64;
    match b {
        None => {
            for lag in (2..n).step_by(2) {
                let dc = lag_change(s, a, lag);
                let c = corr[lag - 1];
                delta += (dc * (2 * c + dc)) as i64;
            }
        }
        Some(b) => {
            let gap = b - a;
            // the s_a·s_b term is unchanged when both ends flip
            let both = 4 * (s[a] as i32) * (s[b] as i32);
            for lag in (2..n).step_by(2) {
                let mut dc = lag_change(s, a, lag) + lag_change(s, b, lag);
                if lag == gap {
                    dc += both;
                }
                let c = corr[lag - 1];
                delta += (dc * (2 * c + dc)) as i64;
            }
        }
    }
    delta
}

#[inline]
fn lag_change(s: &[i8], i: usize, k: usize) -> i32 {
    let mut t = 0i32;
    if k <= i {
        t += s[i - k] as i32;
    }
    if i + k < s.len() {
        t += s[i + k] as i32;
    }
    -2 * s[i] as i32 * t
}

/// Above this many even lags the per-flip sum may exceed `i32`.
const WIDE_LAGS: usize = 4096;

/// A skew-symmetric sequence together with its expansion and cached
/// correlations, updated in O(L) per flip.
///
/// Positions of equal parity are also kept in zero-padded arrays, so the
/// neighbours at distance `2m` on either side are contiguous and the
/// even-lag delta loop runs without branches.
#[derive(Clone, Debug)]
pub struct SkewState {
    half: SkewHalf,
    full: Vec<i8>,
    corr: Vec<i32>,
    energy: i64,
    /// `C_{2m}` for `m = 1..=M`.
    even: Vec<i32>,
    /// Signs at positions of parity 0 and 1, with `M` zeros on each side.
    parity: [Vec<i32>; 2],
    /// The same arrays reversed.
    mirrored: [Vec<i32>; 2],
}

impl SkewState {
    pub fn new(half: SkewHalf) -> Self {
        let seq = half.expand();
        let st = autocorrelation(&seq);
        let full = seq.into_signs();
        let m = (full.len() - 1) / 2;
        let parity = [0, 1].map(|p| {
            let mut v = vec![0i32; m];
            v.extend(full.iter().skip(p).step_by(2).map(|&x| x as i32));
            v.extend(std::iter::repeat_n(0, m));
            v
        });
        let mirrored = parity.clone().map(|mut v| {
            v.reverse();
            v
        });
        let corr = st.correlations().to_vec();
        let even = (1..=m).map(|j| corr[2 * j - 1]).collect();
        Self {
            half,
            full,
            corr,
            energy: st.energy(),
            even,
            parity,
            mirrored,
        }
    }

    #[inline]
    fn slot(&self, i: usize) -> usize {
        self.even.len() + i / 2
    }

    /// Same-parity neighbours of `i`: `lo` holds `s_{i-2}, s_{i-4}, ...` and
    /// `hi` holds `s_{i+2}, s_{i+4}, ...`.
    #[inline]
    fn wings(&self, i: usize) -> (&[i32], &[i32]) {
        let m = self.even.len();
        let q = &self.parity[i % 2];
        let r = &self.mirrored[i % 2];
        let x = self.slot(i);
        let y = q.len() - 1 - x;
        (&r[y + 1..=y + m], &q[x + 1..=x + m])
    }

    fn fast_delta(&self, a: usize, b: Option<usize>) -> i64 {
        if self.even.len() > WIDE_LAGS {
            return self.wide_delta(a, b);
        }
        let m = self.even.len();
        let sa = -2 * self.full[a] as i32;
        let (lo_a, hi_a) = self.wings(a);
        let Some(b) = b else {
            let mut acc = 0i32;
            for ((&l, &h), &c) in lo_a.iter().zip(hi_a).zip(&self.even) {
                let dc = sa * (l + h);
                acc += dc * (2 * c + dc);
            }
            return acc as i64;
        };
        let sb = -2 * self.full[b] as i32;
        let (lo_b, hi_b) = self.wings(b);
        let mut acc = 0i32;
        for i in 0..m {
            let dc = sa * (lo_a[i] + hi_a[i]) + sb * (lo_b[i] + hi_b[i]);
            acc += dc * (2 * self.even[i] + dc);
        }
        // the s_a·s_b product keeps its sign when both ends flip
        let g = (b - a) / 2;
        if (1..=m).contains(&g) {
            let dc = sa * (lo_a[g - 1] + hi_a[g - 1]) + sb * (lo_b[g - 1] + hi_b[g - 1]);
            let c = self.even[g - 1];
            let e = sa * sb;
            acc += e * (2 * c + 2 * dc + e);
        }
        acc as i64
    }

    /// 64-bit accumulation for lengths where the 32-bit sum could overflow.
    fn wide_delta(&self, a: usize, b: Option<usize>) -> i64 {
        pair_flip_delta(&self.full, &self.corr, a, b)
    }

    fn set_sign(&mut self, i: usize) {
        let x = self.slot(i);
        let q = &mut self.parity[i % 2];
        let y = q.len() - 1 - x;
        q[x] = self.full[i] as i32;
        self.mirrored[i % 2][y] = self.full[i] as i32;
    }

    pub fn half(&self) -> &SkewHalf {
        &self.half
    }

    pub fn energy(&self) -> i64 {
        self.energy
    }

    pub fn len(&self) -> usize {
        self.full.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn full_signs(&self) -> &[i8] {
        &self.full
    }

    pub fn to_sequence(&self) -> BinarySequence {
        BinarySequence::from_signs_unchecked(self.full.clone())
    }

    pub fn correlations(&self) -> &[i32] {
        &self.corr
    }

    /// Delta for 1-based half index `j`.
    pub fn flip_delta(&self, j: usize) -> Result<FlipDelta> {
        let (a, b) = self.half.mirror_positions(j)?;
        Ok(FlipDelta {
            index: j,
            delta: self.fast_delta(a, b),
        })
    }

    /// Delta for 0-based half position `h`, unchecked.
    #[inline]
    pub(crate) fn delta_at(&self, h: usize) -> i64 {
        let k = self.half.k();
        let b = (h < k).then(|| 2 * k - h);
        self.fast_delta(h, b)
    }

    /// Applies the flip as two sequential single-position updates.
    pub fn apply_flip(&mut self, j: usize) -> Result<FlipDelta> {
        let (a, b) = self.half.mirror_positions(j)?;
        let mut delta = sequence::apply_single_flip(&mut self.full, &mut self.corr, a);
        self.set_sign(a);
        if let Some(b) = b {
            delta += sequence::apply_single_flip(&mut self.full, &mut self.corr, b);
            self.set_sign(b);
        }
        for (j, e) in self.even.iter_mut().enumerate() {
            *e = self.corr[2 * j + 1];
        }
        self.half.flip_half(j - 1);
        self.energy += delta;
        Ok(FlipDelta { index: j, delta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn expansion_by_hand() {
        let half = SkewHalf::new(vec![1, 1, 1]).unwrap();
        assert_eq!(half.len(), 5);
        assert_eq!(half.expand(), "+++-+".parse().unwrap());
        assert_eq!(SkewHalf::new(vec![1]), Err(Error::InvalidLength(1)));
    }

    #[test]
    fn center_flip_by_hand() {
        let half = SkewHalf::new(vec![1, 1, 1]).unwrap();
        let mut st = SkewState::new(half.clone());
        assert_eq!(st.energy(), 2);
        // +,+,-,-,+ : C = [0, -3, 0, 1]
        let d = skew_flip_delta(&half, &autocorrelation(&half.expand()), 3).unwrap();
        assert_eq!(d.delta, 8);
        st.apply_flip(3).unwrap();
        assert_eq!(st.to_sequence(), "++--+".parse().unwrap());
        assert_eq!(st.correlations(), &[0, -3, 0, 1]);
        assert_eq!(st.energy(), 10);
        st.apply_flip(3).unwrap();
        assert_eq!(st.energy(), 2);
        assert_eq!(st.half(), &half);
    }

    #[test]
    fn index_bounds() {
        let half = SkewHalf::new(vec![1, 1, 1]).unwrap();
        let st = SkewState::new(half);
        assert!(st.flip_delta(0).is_err());
        assert!(st.flip_delta(4).is_err());
    }

    #[test]
    fn skew_delta_matches_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &len in &[51usize, 101] {
            for _ in 0..300 {
                let half = SkewHalf::random(len, &mut rng).unwrap();
                let state = autocorrelation(&half.expand());
                let j = rng.gen_range(1..=half.k() + 1);
                let d = skew_flip_delta(&half, &state, j).unwrap().delta;
                let mut flipped = half.clone();
                flipped.flip_half(j - 1);
                assert_eq!(flipped.expand().energy(), state.energy() + d);
            }
        }
    }

    #[test]
    fn from_sequence_detects_symmetry() {
        assert!(SkewHalf::from_sequence(&"+++-+".parse().unwrap()).is_some());
        assert!(SkewHalf::from_sequence(&"++--+".parse().unwrap()).is_some());
        assert!(SkewHalf::from_sequence(&"+++++".parse().unwrap()).is_none());
        assert!(SkewHalf::from_sequence(&"++++".parse().unwrap()).is_none());
    }

    proptest! {
        #[test]
        fn odd_lags_vanish(bits in prop::collection::vec(any::<bool>(), 2..120)) {
            let half = SkewHalf::new(bits.iter().map(|&b| if b { 1 } else { -1 }).collect()).unwrap();
            let seq = half.expand();
            prop_assert!(is_skew_symmetric(&seq));
            let st = autocorrelation(&seq);
            for lag in (1..seq.len()).step_by(2) {
                prop_assert_eq!(st.correlation(lag), 0);
            }
        }

        #[test]
        fn walk_state_stays_consistent(seed in any::<u64>(), len in (3usize..80).prop_map(|n| n | 1)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut st = SkewState::new(SkewHalf::random(len, &mut rng).unwrap());
            for _ in 0..20 {
                let j = rng.gen_range(1..=st.half().k() + 1);
                let predicted = st.flip_delta(j).unwrap().delta;
                let before = st.energy();
                let applied = st.apply_flip(j).unwrap().delta;
                prop_assert_eq!(predicted, applied);
                let seq = st.to_sequence();
                prop_assert_eq!(st.energy(), before + applied);
                let scratch = autocorrelation(&seq);
                prop_assert_eq!(st.correlations(), scratch.correlations());
                prop_assert_eq!(st.energy(), scratch.energy());
                prop_assert_eq!(&st.half().expand(), &seq);
            }
        }
    }
}
