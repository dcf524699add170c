//! Rotated-and-extended Legendre sequences used to seed Step 2.
//!
//! A Legendre sequence of prime length `q` is rotated left by about `r·q`
//! positions and its first elements are appended until the requested length
//! is reached, i.e. the result is a window of the periodic extension. For a
//! target length `L` the primes tried are those whose append fraction
//! `(L - q)/q` falls in the configured range, plus the nearest prime on each
//! side of that range.

use serde::{Deserialize, Serialize};

use crate::candidate::{Candidate, Origin};
use crate::error::{Error, Result};
use crate::sequence::BinarySequence;

/// Value placed at position 0, where the Legendre symbol is 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ZeroConvention {
    Plus,
    #[default]
    Minus,
}

impl ZeroConvention {
    fn sign(self) -> i8 {
        match self {
            ZeroConvention::Plus => 1,
            ZeroConvention::Minus => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructConfig {
    /// Rotation fraction range `r`.
    pub rotation_range: (f64, f64),
    /// Append fraction range `t̂`.
    pub append_range: (f64, f64),
    /// Evenly spaced rotation fractions per prime; `None` tries every integer
    /// offset in `⌊r_min·q⌋..=⌈r_max·q⌉`.
    pub rotation_steps: Option<usize>,
    pub zero: ZeroConvention,
    /// Explicit prime list replacing the automatic choice.
    pub primes: Option<Vec<u64>>,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        Self {
            rotation_range: (0.20, 0.24),
            append_range: (0.055, 0.063),
            rotation_steps: None,
            zero: ZeroConvention::Minus,
            primes: None,
        }
    }
}

impl ConstructConfig {
    pub fn validate(&self) -> Result<()> {
        let (r0, r1) = self.rotation_range;
        let (t0, t1) = self.append_range;
        if !(0.0..=1.0).contains(&r0) || !(0.0..=1.0).contains(&r1) || r0 > r1 {
            return Err(Error::Config(format!(
                "rotation range ({r0}, {r1}) must be ordered within [0, 1]"
            )));
        }
        if !(0.0..=1.0).contains(&t0) || !(0.0..=1.0).contains(&t1) || t0 > t1 {
            return Err(Error::Config(format!(
                "append range ({t0}, {t1}) must be ordered within [0, 1]"
            )));
        }
        if self.rotation_steps == Some(0) {
            return Err(Error::Config("grid needs at least one step".into()));
        }
        Ok(())
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

fn legendre_signs(q: u64, zero: ZeroConvention) -> Result<Vec<i8>> {
    if q < 3 || !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    let q = q as usize;
    let mut signs = vec![-1i8; q];
    for x in 1..q {
        signs[x * x % q] = 1;
    }
    signs[0] = zero.sign();
    Ok(signs)
}

/// Quadratic-residue indicator sequence of odd prime length `q`.
pub fn legendre(q: u64, zero: ZeroConvention) -> Result<BinarySequence> {
    BinarySequence::new(legendre_signs(q, zero)?)
}

/// Window of length `len` of the periodic extension of `legendre(q)` rotated
/// left by `offset`.
pub fn rotated_extension(
    q: u64,
    offset: usize,
    len: usize,
    zero: ZeroConvention,
) -> Result<BinarySequence> {
    let base = legendre_signs(q, zero)?;
    let q = q as usize;
    BinarySequence::new((0..len).map(|i| base[(i + offset) % q]).collect())
}

/// Rotates by `round(r·q)` and appends the first `round(t̂·q)` elements.
pub fn construct_sequence(
    q: u64,
    r: f64,
    t_hat: f64,
    zero: ZeroConvention,
) -> Result<BinarySequence> {
    if !(0.0..=1.0).contains(&r) || !(0.0..=1.0).contains(&t_hat) {
        return Err(Error::Config(format!(
            "fractions r={r}, t̂={t_hat} must lie in [0, 1]"
        )));
    }
    let offset = round_half_up(r * q as f64);
    let appended = round_half_up(t_hat * q as f64);
    rotated_extension(q, offset, q as usize + appended, zero)
}

/// Primes whose append fraction lands in range, widened by the nearest prime
/// below and above the ideal interval `[L/(1+t̂_max), L/(1+t̂_min)]`.
pub fn candidate_primes(len: usize, config: &ConstructConfig) -> Vec<u64> {
    if let Some(p) = &config.primes {
        return p
            .iter()
            .copied()
            .filter(|&q| q >= 3 && q as usize <= len && is_prime(q))
            .collect();
    }
    let (t0, t1) = config.append_range;
    let lo = len as f64 / (1.0 + t1);
    let hi = len as f64 / (1.0 + t0);
    let mut primes: Vec<u64> = (lo.ceil() as u64..=hi.floor() as u64)
        .filter(|&q| q >= 3 && is_prime(q))
        .collect();
    if let Some(below) = (3..lo.ceil() as u64).rev().find(|&q| is_prime(q)) {
        primes.push(below);
    }
    if let Some(above) = (hi.floor() as u64 + 1..=len as u64).find(|&q| is_prime(q)) {
        primes.push(above);
    }
    primes.sort_unstable();
    primes.dedup();
    primes
}

fn rotation_offsets(q: u64, config: &ConstructConfig) -> Vec<usize> {
    let (r0, r1) = config.rotation_range;
    let qf = q as f64;
    let mut offsets: Vec<usize> = match config.rotation_steps {
        None => ((r0 * qf).floor() as usize..=(r1 * qf).ceil() as usize).collect(),
        Some(1) => vec![round_half_up(r0 * qf)],
        Some(n) => (0..n)
            .map(|i| round_half_up((r0 + (r1 - r0) * i as f64 / (n - 1) as f64) * qf))
            .collect(),
    };
    offsets.dedup();
    offsets.into_iter().map(|o| o % q as usize).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub prime: u64,
    pub offset: usize,
    pub appended: usize,
    pub candidate: Candidate,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeedGrid {
    /// Sorted by merit factor descending.
    pub points: Vec<GridPoint>,
    /// Set when no prime admits the target length.
    pub diagnostic: Option<String>,
}

pub fn seed_grid(len: usize, config: &ConstructConfig) -> Result<SeedGrid> {
    config.validate()?;
    if len < 2 {
        return Err(Error::InvalidLength(len));
    }
    let primes = candidate_primes(len, config);
    if primes.is_empty() {
        return Ok(SeedGrid {
            points: Vec::new(),
            diagnostic: Some(format!(
                "no odd prime q <= {len} near the append range {:?}",
                config.append_range
            )),
        });
    }
    let mut points = Vec::new();
    for &q in &primes {
        for offset in rotation_offsets(q, config) {
            let seq = rotated_extension(q, offset, len, config.zero)?;
            points.push(GridPoint {
                prime: q,
                offset,
                appended: len - q as usize,
                candidate: Candidate::new(seq, Origin::Construction),
            });
        }
    }
    points.sort_by_key(|p| (p.candidate.energy, p.prime, p.offset));
    Ok(SeedGrid {
        points,
        diagnostic: None,
    })
}

/// Best merit factor over the default grid, or `None` if the grid is empty.
pub fn best_construction(len: usize, config: &ConstructConfig) -> Result<Option<GridPoint>> {
    Ok(seed_grid(len, config)?.points.into_iter().next())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signs(s: &BinarySequence) -> Vec<i8> {
        s.signs().to_vec()
    }

    #[test]
    fn legendre_small_primes() {
        assert_eq!(
            signs(&legendre(3, ZeroConvention::Plus).unwrap()),
            vec![1, 1, -1]
        );
        assert_eq!(
            signs(&legendre(7, ZeroConvention::Plus).unwrap()),
            vec![1, 1, 1, -1, 1, -1, -1]
        );
        assert_eq!(signs(&legendre(7, ZeroConvention::Minus).unwrap())[0], -1);
        let l11 = legendre(11, ZeroConvention::Plus).unwrap();
        assert_eq!(l11.signs().iter().filter(|&&s| s > 0).count(), 6);
    }

    #[test]
    fn rejects_non_primes() {
        assert_eq!(legendre(9, ZeroConvention::Plus), Err(Error::NotPrime(9)));
        assert_eq!(legendre(2, ZeroConvention::Plus), Err(Error::NotPrime(2)));
        assert!(is_prime(431) && is_prime(467) && !is_prime(425));
    }

    #[test]
    fn degenerate_constructions() {
        let z = ZeroConvention::Plus;
        let l = legendre(13, z).unwrap();
        let pure = construct_sequence(13, 0.25, 0.0, z).unwrap();
        assert_eq!(pure.len(), 13);
        assert_eq!(pure, l.rotated_left(3));

        let one = construct_sequence(13, 0.0, 0.08, z).unwrap();
        let mut expect = signs(&l);
        expect.push(expect[0]);
        assert_eq!(signs(&one), expect);
        assert!(construct_sequence(13, 1.5, 0.0, z).is_err());
    }

    #[test]
    fn construction_is_deterministic() {
        let a = construct_sequence(101, 0.22, 0.06, ZeroConvention::Minus).unwrap();
        let b = construct_sequence(101, 0.22, 0.06, ZeroConvention::Minus).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 107);
    }

    #[test]
    fn prime_choice_brackets_interval() {
        let cfg = ConstructConfig::default();
        // no prime lies inside [423.3, 426.5]
        assert_eq!(candidate_primes(450, &cfg), vec![421, 431]);
        assert_eq!(candidate_primes(491, &cfg), vec![461, 463, 467]);
    }

    #[test]
    fn single_point_grid() {
        let cfg = ConstructConfig {
            rotation_steps: Some(1),
            primes: Some(vec![101]),
            ..ConstructConfig::default()
        };
        let g = seed_grid(107, &cfg).unwrap();
        assert_eq!(g.points.len(), 1);
        assert_eq!(g.points[0].prime, 101);
        assert_eq!(g.points[0].appended, 6);
    }

    #[test]
    fn grid_lengths_and_order() {
        let g = seed_grid(120, &ConstructConfig::default()).unwrap();
        assert!(!g.points.is_empty());
        assert!(g
            .points
            .iter()
            .all(|p| p.candidate.len() == 120 && p.candidate.origin == Origin::Construction));
        assert!(g
            .points
            .windows(2)
            .all(|w| w[0].candidate.merit() >= w[1].candidate.merit()));
    }

    #[test]
    fn empty_grid_has_diagnostic() {
        let cfg = ConstructConfig {
            primes: Some(vec![4, 9]),
            ..ConstructConfig::default()
        };
        let g = seed_grid(10, &cfg).unwrap();
        assert!(g.points.is_empty());
        assert!(g.diagnostic.is_some());
    }
}
