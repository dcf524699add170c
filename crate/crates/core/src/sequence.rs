//! Binary sequences, aperiodic autocorrelations and single-flip updates.
//!
//! All correlation arithmetic is exact integer arithmetic. Floating point only
//! appears in the final merit-factor division `L² / (2E)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// A ±1 sequence of length at least 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinarySequence {
    signs: Vec<i8>,
}

impl BinarySequence {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.len() < 2 {
            return Err(Error::InvalidLength(signs.len()));
        }
        if let Some((position, &value)) = signs.iter().enumerate().find(|(_, &s)| s != 1 && s != -1)
        {
            return Err(Error::InvalidElement {
                position,
                value: value as i64,
            });
        }
        Ok(Self { signs })
    }

    /// `true` maps to +1, `false` to -1.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        Self::new(bits.iter().map(|&b| if b { 1 } else { -1 }).collect())
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        Self::new(
            (0..len)
                .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                .collect(),
        )
    }

    pub(crate) fn from_signs_unchecked(signs: Vec<i8>) -> Self {
        debug_assert!(signs.len() >= 2 && signs.iter().all(|&s| s == 1 || s == -1));
        Self { signs }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn into_signs(self) -> Vec<i8> {
        self.signs
    }

    pub fn negated(&self) -> Self {
        Self {
            signs: self.signs.iter().map(|&s| -s).collect(),
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            signs: self.signs.iter().rev().copied().collect(),
        }
    }

    /// Cyclic shift toward lower indices: the first `r` elements move to the end.
    pub fn rotated_left(&self, r: usize) -> Self {
        let mut signs = self.signs.clone();
        signs.rotate_left(r % self.len());
        Self { signs }
    }

    /// Cyclic shift toward higher indices: the last `r` elements move to the front.
    pub fn rotated_right(&self, r: usize) -> Self {
        let mut signs = self.signs.clone();
        signs.rotate_right(r % self.len());
        Self { signs }
    }

    pub fn energy(&self) -> i64 {
        autocorrelation(self).energy
    }

    pub fn merit_factor(&self) -> Result<f64> {
        merit_from_energy(self.len(), self.energy())
    }

    /// Negates position `i` in place without touching any cached state.
    pub fn flip(&mut self, i: usize) -> Result<()> {
        check_index(i, self.len())?;
        self.signs[i] = -self.signs[i];
        Ok(())
    }

    /// Bit-packed form, bit `i` of word `i / 64` set when element `i` is +1.
    pub fn pack(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.len().div_ceil(64)];
        for (i, &s) in self.signs.iter().enumerate() {
            if s > 0 {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        words
    }

    pub fn unpack(words: &[u64], len: usize) -> Result<Self> {
        if len > words.len() * 64 {
            return Err(Error::InvalidLength(len));
        }
        Self::new(
            (0..len)
                .map(|i| {
                    if words[i / 64] >> (i % 64) & 1 == 1 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
        )
    }
}

impl fmt::Display for BinarySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.signs {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Parses a string of `+` and `-` characters.
impl FromStr for BinarySequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .chars()
            .enumerate()
            .map(|(position, c)| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::InvalidElement {
                    position,
                    value: other as i64,
                }),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::new(signs)
    }
}

/// Cached aperiodic autocorrelations `C_1..C_{L-1}` and the energy `Σ C_k²`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CorrelationState {
    correlations: Vec<i32>,
    energy: i64,
}

impl CorrelationState {
    /// `C_k` for lag `k` in `1..L`.
    pub fn correlation(&self, lag: usize) -> i32 {
        self.correlations[lag - 1]
    }

    /// Correlations indexed from lag 1.
    pub fn correlations(&self) -> &[i32] {
        &self.correlations
    }

    pub fn energy(&self) -> i64 {
        self.energy
    }
}

/// Exact energy change of a proposed flip.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlipDelta {
    pub index: usize,
    pub delta: i64,
}

pub fn autocorrelation(seq: &BinarySequence) -> CorrelationState {
    let s = seq.signs();
    let n = s.len();
    let correlations: Vec<i32> = (1..n)
        .map(|k| {
            s[..n - k]
                .iter()
                .zip(&s[k..])
                .map(|(&a, &b)| (a * b) as i32)
                .sum()
        })
        .collect();
    let energy = correlations.iter().map(|&c| (c as i64) * (c as i64)).sum();
    CorrelationState {
        correlations,
        energy,
    }
}

/// `F = L² / (2E)`.
pub fn merit_from_energy(len: usize, energy: i64) -> Result<f64> {
    if energy == 0 {
        return Err(Error::InfiniteMerit);
    }
    Ok((len as f64 * len as f64) / (2.0 * energy as f64))
}

pub fn merit_factor(seq: &BinarySequence) -> Result<f64> {
    seq.merit_factor()
}

/// Sieve threshold for a target merit factor: `⌈L² / (2F)⌉`.
pub fn energy_limit_for_merit(len: usize, merit: f64) -> i64 {
    let exact = (len * len) as f64 / (2.0 * merit);
    let mut e = exact.ceil() as i64;
    // guard against the float landing a hair off an integer
    while e > 1 && (len * len) as f64 / (2.0 * (e - 1) as f64) <= merit {
        e -= 1;
    }
    while (len * len) as f64 / (2.0 * e as f64) > merit {
        e += 1;
    }
    e
}

/// Largest energy whose merit factor is at least `merit`.
pub fn max_energy_for_merit(len: usize, merit: f64) -> i64 {
    let num = (len * len) as f64;
    let mut e = (num / (2.0 * merit)).floor() as i64;
    while num / (2.0 * (e + 1) as f64) >= merit {
        e += 1;
    }
    while e > 0 && num / (2.0 * e as f64) < merit {
        e -= 1;
    }
    e
}

pub fn flip_delta(seq: &BinarySequence, state: &CorrelationState, i: usize) -> Result<FlipDelta> {
    check_index(i, seq.len())?;
    Ok(FlipDelta {
        index: i,
        delta: single_flip_delta(seq.signs(), &state.correlations, i),
    })
}

pub fn apply_flip(
    seq: &mut BinarySequence,
    state: &mut CorrelationState,
    i: usize,
) -> Result<FlipDelta> {
    check_index(i, seq.len())?;
    let delta = apply_single_flip(&mut seq.signs, &mut state.correlations, i);
    state.energy += delta;
    Ok(FlipDelta { index: i, delta })
}

pub(crate) fn check_index(index: usize, bound: usize) -> Result<()> {
    if index >= bound {
        Err(Error::IndexOutOfRange { index, bound })
    } else {
        Ok(())
    }
}

/// Change of `C_k` when `s_i` is negated: `-2 s_i (s_{i-k} + s_{i+k})`, terms
/// dropped where the index falls outside the sequence.
#[inline]
fn lag_change(s: &[i8], i: usize, k: usize) -> i32 {
    let n = s.len();
    let mut t = 0i32;
    if k <= i {
        t += s[i - k] as i32;
    }
    if i + k < n {
        t += s[i + k] as i32;
    }
    -2 * s[i] as i32 * t
}

pub(crate) fn single_flip_delta(s: &[i8], corr: &[i32], i: usize) -> i64 {
    let n = s.len();
    let mut delta = 0i64;
    for k in 1..n {
        let dc = lag_change(s, i, k);
        let c = corr[k - 1];
        delta += (dc * (2 * c + dc)) as i64;
    }
    delta
}

pub(crate) fn apply_single_flip(s: &mut [i8], corr: &mut [i32], i: usize) -> i64 {
    let n = s.len();
    let mut delta = 0i64;
    for k in 1..n {
        let dc = lag_change(s, i, k);
        let c = corr[k - 1];
        delta += (dc * (2 * c + dc)) as i64;
        corr[k - 1] = c + dc;
    }
    s[i] = -s[i];
    delta
}

/// Above this length the 32-bit delta sum may overflow.
const WIDE_LEN: usize = 8192;

/// Zero-padded copies of a sign vector, forward and reversed, so that both
/// neighbours of a position at every lag come from contiguous slices.
#[derive(Clone, Debug, Default)]
pub(crate) struct FlipKernel {
    fwd: Vec<i32>,
    rev: Vec<i32>,
    n: usize,
}

impl FlipKernel {
    pub(crate) fn load(&mut self, s: &[i8]) {
        let n = s.len();
        let pad = n.saturating_sub(1);
        self.n = n;
        self.fwd.clear();
        self.fwd.resize(pad, 0);
        self.fwd.extend(s.iter().map(|&x| x as i32));
        self.fwd.resize(n + 2 * pad, 0);
        self.rev.clear();
        self.rev.extend(self.fwd.iter().rev());
    }

    #[inline]
    fn wings(&self, i: usize) -> (&[i32], &[i32]) {
        let m = self.n - 1;
        let x = m + i;
        let y = self.fwd.len() - 1 - x;
        (&self.rev[y + 1..=y + m], &self.fwd[x + 1..=x + m])
    }

    /// Delta of negating position `i`, with `corr` the correlations of the
    /// loaded signs.
    #[inline]
    pub(crate) fn delta(&self, corr: &[i32], i: usize) -> i64 {
        if self.n > WIDE_LEN {
            let s: Vec<i8> = self.fwd[self.n - 1..2 * self.n - 1]
                .iter()
                .map(|&x| x as i8)
                .collect();
            return single_flip_delta(&s, corr, i);
        }
        let sa = -2 * self.fwd[self.n - 1 + i];
        let (lo, hi) = self.wings(i);
        let mut acc = 0i32;
        for ((&l, &h), &c) in lo.iter().zip(hi).zip(corr) {
            let dc = sa * (l + h);
            acc += dc * (2 * c + dc);
        }
        acc as i64
    }

    /// Negates position `i` in `s`, `corr` and the kernel; returns the delta.
    pub(crate) fn apply(&mut self, s: &mut [i8], corr: &mut [i32], i: usize) -> i64 {
        let delta = apply_single_flip(s, corr, i);
        let x = self.n - 1 + i;
        let y = self.fwd.len() - 1 - x;
        self.fwd[x] = s[i] as i32;
        self.rev[y] = s[i] as i32;
        delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(s: &str) -> BinarySequence {
        s.parse().unwrap()
    }

    /// Textbook double sum, independent of `autocorrelation`.
    fn brute_energy(s: &[i8]) -> i64 {
        let n = s.len();
        let mut e = 0i64;
        for k in 1..n {
            let mut c = 0i64;
            for i in 0..n - k {
                c += (s[i] * s[i + k]) as i64;
            }
            e += c * c;
        }
        e
    }

    #[test]
    fn hand_computed_correlations() {
        let st = autocorrelation(&seq("++-"));
        assert_eq!(st.correlations(), &[0, -1]);
        assert_eq!(st.energy(), 1);

        let st = autocorrelation(&seq("+++-+"));
        assert_eq!(st.correlations(), &[0, 1, 0, 1]);
        assert_eq!(st.energy(), 2);
    }

    #[test]
    fn barker_13() {
        let b = seq("+++++--++-+-+");
        assert_eq!(brute_energy(b.signs()), 6);
        assert_eq!(b.energy(), 6);
        assert!((b.merit_factor().unwrap() - 169.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn merit_examples() {
        assert_eq!(seq("++-").merit_factor().unwrap(), 4.5);
        assert_eq!(seq("+++-+").merit_factor().unwrap(), 6.25);
        assert_eq!(merit_from_energy(4, 0), Err(Error::InfiniteMerit));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(BinarySequence::new(vec![1]), Err(Error::InvalidLength(1)));
        assert!(matches!(
            BinarySequence::new(vec![1, 0, -1]),
            Err(Error::InvalidElement { position: 1, .. })
        ));
        let s = seq("++-");
        let st = autocorrelation(&s);
        assert!(matches!(
            flip_delta(&s, &st, 3),
            Err(Error::IndexOutOfRange { index: 3, bound: 3 })
        ));
    }

    #[test]
    fn flip_example() {
        let mut s = seq("++-");
        let mut st = autocorrelation(&s);
        assert_eq!(flip_delta(&s, &st, 2).unwrap().delta, 4);
        apply_flip(&mut s, &mut st, 2).unwrap();
        assert_eq!(s, seq("+++"));
        assert_eq!(st.correlations(), &[2, 1]);
        assert_eq!(st.energy(), 5);
    }

    #[test]
    fn flip_parity_against_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &len in &[50usize, 101, 250] {
            for _ in 0..1000 {
                let mut s = BinarySequence::random(len, &mut rng).unwrap();
                let mut st = autocorrelation(&s);
                let i = rng.gen_range(0..len);
                let before = st.energy();
                let d = flip_delta(&s, &st, i).unwrap().delta;
                apply_flip(&mut s, &mut st, i).unwrap();
                assert_eq!(st, autocorrelation(&s));
                assert_eq!(brute_energy(s.signs()), before + d);
            }
        }
    }

    #[test]
    fn padded_kernel_matches_plain_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &len in &[2usize, 3, 17, 64, 301] {
            let mut s = BinarySequence::random(len, &mut rng).unwrap().into_signs();
            let mut corr = autocorrelation(&BinarySequence::new(s.clone()).unwrap())
                .correlations()
                .to_vec();
            let mut kernel = FlipKernel::default();
            kernel.load(&s);
            for _ in 0..200 {
                let i = rng.gen_range(0..len);
                assert_eq!(kernel.delta(&corr, i), single_flip_delta(&s, &corr, i));
                let expect = single_flip_delta(&s, &corr, i);
                assert_eq!(kernel.apply(&mut s, &mut corr, i), expect);
            }
            let mut fresh = FlipKernel::default();
            fresh.load(&s);
            assert_eq!(fresh.fwd, kernel.fwd);
            assert_eq!(fresh.rev, kernel.rev);
        }
    }

    #[test]
    fn merit_thresholds() {
        assert_eq!(energy_limit_for_merit(455, 6.5), 15925);
        assert_eq!(max_energy_for_merit(455, 6.5), 15925);
        assert_eq!(energy_limit_for_merit(71, 6.0), 421);
        assert_eq!(max_energy_for_merit(71, 6.0), 420);
    }

    fn signs_strategy() -> impl Strategy<Value = Vec<i8>> {
        prop::collection::vec(
            prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }),
            2..80,
        )
    }

    proptest! {
        #[test]
        fn energy_is_sum_of_squares(signs in signs_strategy()) {
            let s = BinarySequence::new(signs).unwrap();
            let st = autocorrelation(&s);
            prop_assert_eq!(st.energy(), brute_energy(s.signs()));
            for (k, &c) in st.correlations().iter().enumerate() {
                prop_assert!(c.unsigned_abs() as usize <= s.len() - (k + 1));
            }
        }

        #[test]
        fn negation_and_reversal_preserve_correlations(signs in signs_strategy()) {
            let s = BinarySequence::new(signs).unwrap();
            let st = autocorrelation(&s);
            prop_assert_eq!(&autocorrelation(&s.negated()), &st);
            prop_assert_eq!(&autocorrelation(&s.reversed()), &st);
        }

        #[test]
        fn double_flip_restores(signs in signs_strategy(), i in 0usize..80) {
            let mut s = BinarySequence::new(signs).unwrap();
            let i = i % s.len();
            let orig = s.clone();
            let mut st = autocorrelation(&s);
            let orig_st = st.clone();
            let d1 = apply_flip(&mut s, &mut st, i).unwrap().delta;
            let d2 = apply_flip(&mut s, &mut st, i).unwrap().delta;
            prop_assert_eq!(d1 + d2, 0);
            prop_assert_eq!(s, orig);
            prop_assert_eq!(st, orig_st);
        }

        #[test]
        fn pack_roundtrip(signs in signs_strategy()) {
            let s = BinarySequence::new(signs).unwrap();
            prop_assert_eq!(BinarySequence::unpack(&s.pack(), s.len()).unwrap(), s);
        }
    }
}
