//! Step 1: parallel self-avoiding walks over skew-symmetric restriction classes.
//!
//! Each walker owns a restriction class, i.e. a fixed prefix `s_1..s_p` of the
//! skew half, and repeatedly runs walks that start from a random completion
//! of that prefix. A walk moves to the best unvisited single-position
//! neighbour (a mirrored pair flip in the full sequence) for at most `T_i`
//! steps, remembering visited pivots in a per-walker Bloom filter. Pivots
//! whose energy falls below the sieve limit `E_l` are emitted as candidates.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloom::BloomFilter;
use crate::candidate::{Candidate, Origin};
use crate::error::{Error, Result};
use crate::hashing::{splitmix64, HashPair, ZobristPair};
use crate::sequence::{autocorrelation, energy_limit_for_merit, BinarySequence, FlipDelta};
use crate::skew::{SkewHalf, SkewState};

/// Sieve target used when no explicit limit is configured.
pub const DEFAULT_SIEVE_MERIT: f64 = 6.0;

/// Largest prefix length [`rank_prefixes`] will enumerate.
pub const MAX_PREFIX_LEN: usize = 30;

/// A restriction class: the fixed leading elements of the skew half.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartitionPrefix {
    signs: Vec<i8>,
    potential: i64,
}

impl PartitionPrefix {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some((position, &value)) = signs.iter().enumerate().find(|(_, &s)| s != 1 && s != -1)
        {
            return Err(Error::InvalidElement {
                position,
                value: value as i64,
            });
        }
        let potential = prefix_self_energy(&signs);
        Ok(Self { signs, potential })
    }

    pub fn empty() -> Self {
        Self {
            signs: Vec::new(),
            potential: 0,
        }
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn potential(&self) -> i64 {
        self.potential
    }
}

/// Energy of the prefix read as a standalone sequence. Prefixes with small
/// self-correlation are ranked first.
pub fn prefix_self_energy(signs: &[i8]) -> i64 {
    let p = signs.len();
    (1..p)
        .map(|k| {
            let c: i64 = (0..p - k).map(|i| (signs[i] * signs[i + k]) as i64).sum();
            c * c
        })
        .sum()
}

fn check_prefix_len(len: usize, p: usize) -> Result<()> {
    if len < 3 || len.is_multiple_of(2) {
        return Err(Error::InvalidLength(len));
    }
    if p > len.div_ceil(2) {
        return Err(Error::Config(format!(
            "prefix length {p} exceeds half length {}",
            len.div_ceil(2)
        )));
    }
    Ok(())
}

pub fn rank_prefixes(len: usize, p: usize) -> Result<Vec<PartitionPrefix>> {
    rank_prefixes_by(len, p, prefix_self_energy)
}

/// Enumerates the `2^{p-1}` prefixes with `s_1 = +1` (global negation maps a
/// class onto its mirror) and orders them by ascending `potential`, ties in
/// enumeration order.
pub fn rank_prefixes_by(
    len: usize,
    p: usize,
    potential: impl Fn(&[i8]) -> i64,
) -> Result<Vec<PartitionPrefix>> {
    if p == 0 {
        return Err(Error::Config("prefix ranking needs p >= 1".into()));
    }
    if p > MAX_PREFIX_LEN {
        return Err(Error::Config(format!(
            "prefix length {p} is too large to enumerate (max {MAX_PREFIX_LEN})"
        )));
    }
    check_prefix_len(len, p)?;
    let mut ranked: Vec<PartitionPrefix> = (0u64..1 << (p - 1))
        .map(|mask| {
            let signs: Vec<i8> = std::iter::once(1)
                .chain((0..p - 1).map(|b| if mask >> b & 1 == 1 { -1 } else { 1 }))
                .collect();
            PartitionPrefix {
                potential: potential(&signs),
                signs,
            }
        })
        .collect();
    ranked.sort_by_key(|pp| pp.potential);
    Ok(ranked)
}

/// Walker `w` gets the `w mod n`-th ranked class.
pub fn assign_prefixes(len: usize, p: usize, walkers: usize) -> Result<Vec<PartitionPrefix>> {
    if p == 0 {
        check_prefix_len(len, 0)?;
        return Ok(vec![PartitionPrefix::empty(); walkers]);
    }
    let ranked = rank_prefixes(len, p)?;
    Ok((0..walkers)
        .map(|w| ranked[w % ranked.len()].clone())
        .collect())
}

/// `⌈log2(walkers)⌉ + 1`, so every walker has its own class.
pub fn default_prefix_len(walkers: usize) -> usize {
    walkers.max(1).next_power_of_two().trailing_zeros() as usize + 1
}

/// `8·(L+1)/2`.
pub fn default_max_iters(len: usize) -> usize {
    8 * (len + 1) / 2
}

pub fn init_partitioned_sequence<R: Rng + ?Sized>(
    len: usize,
    prefix: &PartitionPrefix,
    rng: &mut R,
) -> Result<SkewHalf> {
    check_prefix_len(len, prefix.len())?;
    let half_len = len.div_ceil(2);
    let mut half = prefix.signs().to_vec();
    half.extend((prefix.len()..half_len).map(|_| if rng.gen::<bool>() { 1i8 } else { -1 }));
    SkewHalf::new(half)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SawConfig {
    /// Odd target length.
    pub length: usize,
    pub prefix_len: usize,
    pub walkers: usize,
    /// `T_i`, maximum steps of one walk.
    pub max_iters: usize,
    /// `E_l`, pivots with energy strictly below this are emitted.
    pub energy_limit: i64,
    /// Bloom false-positive target at `max_iters + 1` insertions.
    pub bloom_fpr: f64,
    pub seed: u64,
    /// Walks per walker before the pool stops.
    pub walks_per_walker: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Stop once this many candidates were emitted.
    pub candidate_quota: Option<u64>,
    /// Worker threads; 1 runs everything on the caller's thread.
    pub threads: usize,
    /// Recompute the energy from scratch after every step and panic on drift.
    pub audit: bool,
}

impl SawConfig {
    pub fn new(length: usize) -> Self {
        let walkers = 4;
        Self {
            length,
            prefix_len: default_prefix_len(walkers).min(length.div_ceil(2)),
            walkers,
            max_iters: default_max_iters(length),
            energy_limit: energy_limit_for_merit(length, DEFAULT_SIEVE_MERIT),
            bloom_fpr: 1e-4,
            seed: 0,
            walks_per_walker: Some(1),
            time_limit: None,
            candidate_quota: None,
            threads: 1,
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_prefix_len(self.length, self.prefix_len)?;
        if self.prefix_len > MAX_PREFIX_LEN {
            return Err(Error::Config(format!(
                "prefix length {} is too large (max {MAX_PREFIX_LEN})",
                self.prefix_len
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("T_i must be at least 1".into()));
        }
        if self.energy_limit <= 0 {
            return Err(Error::Config("E_l must be positive".into()));
        }
        if self.walkers == 0 {
            return Err(Error::Config("at least one walker is required".into()));
        }
        if !(self.bloom_fpr > 0.0 && self.bloom_fpr < 1.0) {
            return Err(Error::Config(
                "Bloom false-positive rate must lie in (0, 1)".into(),
            ));
        }
        if self.walks_per_walker.is_none()
            && self.time_limit.is_none()
            && self.candidate_quota.is_none()
        {
            return Err(Error::Config(
                "the walk pool needs a walk, time or candidate budget".into(),
            ));
        }
        Ok(())
    }

    fn bloom(&self) -> BloomFilter {
        BloomFilter::with_capacity(self.max_iters as u64 + 1, self.bloom_fpr)
    }
}

/// Receives candidates, possibly from several walker threads at once.
pub trait CandidateSink: Sync {
    fn emit(&self, candidate: Candidate);
}

impl<F: Fn(Candidate) + Sync> CandidateSink for F {
    fn emit(&self, candidate: Candidate) {
        self(candidate)
    }
}

/// Collects candidates, dropping exact duplicates.
#[derive(Debug, Default)]
pub struct CollectSink {
    inner: Mutex<CollectInner>,
}

#[derive(Debug, Default)]
struct CollectInner {
    seen: HashSet<BinarySequence>,
    items: Vec<Candidate>,
    offered: u64,
}

impl CollectSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Distinct candidates kept.
    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Emissions including duplicates.
    pub fn offered(&self) -> u64 {
        self.inner.lock().unwrap().offered
    }

    pub fn into_candidates(self) -> Vec<Candidate> {
        self.inner.into_inner().unwrap().items
    }

    pub fn take(&self) -> Vec<Candidate> {
        let mut inner = self.inner.lock().unwrap();
        inner.seen.clear();
        std::mem::take(&mut inner.items)
    }
}

impl CandidateSink for CollectSink {
    fn emit(&self, candidate: Candidate) {
        let mut inner = self.inner.lock().unwrap();
        inner.offered += 1;
        if inner.seen.insert(candidate.sequence.clone()) {
            inner.items.push(candidate);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkStats {
    pub iterations: usize,
    pub emitted: u64,
    /// The walk stopped because every free neighbour was visited.
    pub exhausted: bool,
    pub start_energy: i64,
    pub best_energy: i64,
    pub best: BinarySequence,
}

/// Index (1-based half index) and delta of the best free neighbour not in
/// `filter`, ties to the lowest index. Only positions after the prefix are
/// free.
pub fn best_neighbour(
    state: &SkewState,
    prefix_len: usize,
    filter: &BloomFilter,
    hasher: &ZobristPair,
    hash: HashPair,
) -> Option<FlipDelta> {
    let mut best: Option<FlipDelta> = None;
    for h in prefix_len..=state.half().k() {
        let delta = state.delta_at(h);
        if best.is_none_or(|b| delta < b.delta) && !filter.contains_pair(hasher.toggled(hash, h)) {
            best = Some(FlipDelta {
                index: h + 1,
                delta,
            });
        }
    }
    best
}

/// Reusable per-walker resources.
struct Walker<'a> {
    config: &'a SawConfig,
    prefix: PartitionPrefix,
    filter: BloomFilter,
    hasher: ZobristPair,
}

impl<'a> Walker<'a> {
    fn new(config: &'a SawConfig, prefix: PartitionPrefix) -> Self {
        Self {
            config,
            prefix,
            filter: config.bloom(),
            hasher: ZobristPair::new(config.length.div_ceil(2)),
        }
    }

    fn walk<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        sink: &dyn CandidateSink,
    ) -> Result<WalkStats> {
        let cfg = self.config;
        self.filter.clear();
        let half = init_partitioned_sequence(cfg.length, &self.prefix, rng)?;
        let mut hash = self.hasher.hash(half.signs());
        let mut state = SkewState::new(half);
        self.filter.insert_pair(hash);

        let mut energy = state.energy();
        let mut stats = WalkStats {
            iterations: 0,
            emitted: 0,
            exhausted: false,
            start_energy: energy,
            best_energy: energy,
            best: state.to_sequence(),
        };
        while stats.iterations < cfg.max_iters {
            stats.iterations += 1;
            let Some(step) =
                best_neighbour(&state, self.prefix.len(), &self.filter, &self.hasher, hash)
            else {
                stats.exhausted = true;
                break;
            };
            state.apply_flip(step.index)?;
            hash = self.hasher.toggled(hash, step.index - 1);
            self.filter.insert_pair(hash);
            energy += step.delta;
            if cfg.audit {
                assert_eq!(
                    energy,
                    autocorrelation(&state.to_sequence()).energy(),
                    "walk energy drifted"
                );
            }
            if energy < stats.best_energy {
                stats.best_energy = energy;
                stats.best = state.to_sequence();
            }
            if energy < cfg.energy_limit {
                let mut c = Candidate::with_energy(state.to_sequence(), energy, Origin::Saw);
                c.partition = Some(self.prefix.signs().to_vec());
                sink.emit(c);
                stats.emitted += 1;
            }
        }
        Ok(stats)
    }
}

/// Runs one walk from a fresh random completion of `prefix`.
pub fn run_walk<R: Rng + ?Sized>(
    config: &SawConfig,
    prefix: &PartitionPrefix,
    rng: &mut R,
    sink: &dyn CandidateSink,
) -> Result<WalkStats> {
    config.validate()?;
    Walker::new(config, prefix.clone()).walk(rng, sink)
}

/// Deterministic per-walker RNG stream.
pub fn walker_rng(seed: u64, walker: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(walker as u64 + 1)))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PoolStats {
    pub walks: u64,
    pub iterations: u64,
    pub emitted: u64,
    pub best: Option<(i64, BinarySequence)>,
    pub elapsed: Duration,
}

impl PoolStats {
    fn absorb(&mut self, w: &WalkStats) {
        self.walks += 1;
        self.iterations += w.iterations as u64;
        self.emitted += w.emitted;
        if self.best.as_ref().is_none_or(|(e, _)| w.best_energy < *e) {
            self.best = Some((w.best_energy, w.best.clone()));
        }
    }

    fn merge(&mut self, other: PoolStats) {
        self.walks += other.walks;
        self.iterations += other.iterations;
        self.emitted += other.emitted;
        if let Some((e, s)) = other.best {
            if self.best.as_ref().is_none_or(|(b, _)| e < *b) {
                self.best = Some((e, s));
            }
        }
    }
}

pub fn run_saw_pool(config: &SawConfig, sink: &dyn CandidateSink) -> Result<PoolStats> {
    let stop = AtomicBool::new(false);
    run_saw_pool_until(config, sink, &stop, 0)
}

/// Pool driver with an external stop flag. `round` offsets the walker RNG
/// streams so successive calls explore fresh starting points.
pub fn run_saw_pool_until(
    config: &SawConfig,
    sink: &dyn CandidateSink,
    stop: &AtomicBool,
    round: u64,
) -> Result<PoolStats> {
    config.validate()?;
    let start = Instant::now();
    let prefixes = assign_prefixes(config.length, config.prefix_len, config.walkers)?;
    let emitted = AtomicU64::new(0);
    let threads = config.threads.clamp(1, config.walkers);
    let seed = splitmix64(config.seed ^ round.wrapping_mul(0x2545_F491_4F6C_DD1D));

    let work = |thread: usize| -> Result<PoolStats> {
        let mut walkers: Vec<(Walker, ChaCha8Rng)> = (thread..config.walkers)
            .step_by(threads)
            .map(|w| {
                (
                    Walker::new(config, prefixes[w].clone()),
                    walker_rng(seed, w),
                )
            })
            .collect();
        let mut stats = PoolStats::default();
        let is_done = || {
            stop.load(Ordering::Relaxed)
                || config.time_limit.is_some_and(|t| start.elapsed() >= t)
                || config
                    .candidate_quota
                    .is_some_and(|q| emitted.load(Ordering::Relaxed) >= q)
        };
        let mut walk_no = 0u64;
        'rounds: while config.walks_per_walker.is_none_or(|m| walk_no < m) {
            for (walker, rng) in walkers.iter_mut() {
                if is_done() {
                    break 'rounds;
                }
                let w = walker.walk(rng, sink)?;
                emitted.fetch_add(w.emitted, Ordering::Relaxed);
                stats.absorb(&w);
            }
            walk_no += 1;
        }
        Ok(stats)
    };

    let mut total = if threads == 1 {
        work(0)?
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads).map(|t| scope.spawn(move || work(t))).collect();
            let mut total = PoolStats::default();
            for h in handles {
                total.merge(h.join().expect("walker thread panicked")?);
            }
            Ok::<_, Error>(total)
        })?
    };
    total.elapsed = start.elapsed();
    Ok(total)
}
