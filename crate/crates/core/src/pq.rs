//! Step 2: best-first refinement over the unrestricted sequence space.
//!
//! The lowest-energy stored sequence is popped as the pivot. Every one of its
//! single-flip neighbours that has not been seen before is pushed, together
//! with up to `T_r` cyclic rotations of that neighbour in each direction. The
//! search ends after `T_u` pops without a strict improvement of the best
//! energy, or when the queue runs dry.
//!
//! Seen sequences are tracked by a 64-bit tabulation hash, which a flip
//! updates in O(1), so membership is checked before the flip is made.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::hash::{BuildHasherDefault, Hasher};

use serde::{Deserialize, Serialize};

use crate::candidate::{Candidate, Origin};
use crate::error::{Error, Result};
use crate::hashing::ZobristTable;
use crate::sequence::{autocorrelation, BinarySequence, FlipKernel};

const FRONTIER_HASH_SEED: u64 = 0xF00D_5EED;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PqConfig {
    /// `T_u`: pops allowed since the last strict improvement.
    pub max_stale: u64,
    /// `T_r`: largest rotation offset tried in each direction.
    pub max_rotation: usize,
    /// Queue entries kept; the worst entry is dropped when a push overflows.
    pub capacity: usize,
    /// Check every enqueued energy against a scratch recomputation.
    pub audit: bool,
}

impl Default for PqConfig {
    fn default() -> Self {
        Self {
            max_stale: 5000,
            max_rotation: 5,
            capacity: 1 << 20,
            audit: false,
        }
    }
}

impl PqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_stale == 0 {
            return Err(Error::Config("T_u must be at least 1".into()));
        }
        if self.capacity == 0 {
            return Err(Error::Config("queue capacity must be at least 1".into()));
        }
        Ok(())
    }
}

/// Identity hasher for keys that are already uniformly random.
#[derive(Default)]
struct PassThrough(u64);

impl Hasher for PassThrough {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ b as u64;
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = v;
    }
}

type HashSet64 = HashSet<u64, BuildHasherDefault<PassThrough>>;

fn unpack_signs(words: impl Iterator<Item = u64>, len: usize) -> Vec<i8> {
    let mut out = Vec::with_capacity(len);
    for w in words {
        for b in 0..64.min(len - out.len()) {
            out.push(if w >> b & 1 == 1 { 1 } else { -1 });
        }
    }
    out
}

/// Bounded min-priority queue with FIFO order among equal energies, plus the
/// set of hashes ever enqueued. Entries live in per-energy buckets of packed
/// sign words.
#[derive(Debug)]
pub struct SearchFrontier {
    buckets: BTreeMap<i64, VecDeque<u64>>,
    visited: HashSet64,
    table: ZobristTable,
    seq_len: usize,
    words: usize,
    count: usize,
    capacity: usize,
    dropped: u64,
}

impl SearchFrontier {
    pub fn new(len: usize, capacity: usize) -> Self {
        Self {
            buckets: BTreeMap::new(),
            visited: HashSet64::default(),
            table: ZobristTable::new(len, FRONTIER_HASH_SEED),
            seq_len: len,
            words: len.div_ceil(64).max(1),
            count: 0,
            capacity: capacity.max(1),
            dropped: 0,
        }
    }

    pub fn hash(&self, signs: &[i8]) -> u64 {
        self.table.hash(signs)
    }

    /// Hash after negating position `i`.
    #[inline]
    pub fn hash_flip(&self, hash: u64, i: usize) -> u64 {
        hash ^ self.table.key(i)
    }

    pub fn is_visited(&self, hash: u64) -> bool {
        self.visited.contains(&hash)
    }

    /// Returns false if the hash was already recorded.
    pub fn mark_visited(&mut self, hash: u64) -> bool {
        self.visited.insert(hash)
    }

    pub fn visited_count(&self) -> usize {
        self.visited.len()
    }

    /// Stores a sequence. When full, the worst entry (latest among equal
    /// energies) is discarded, which may be the new one.
    pub fn push(&mut self, energy: i64, signs: &[i8]) -> bool {
        debug_assert_eq!(signs.len(), self.seq_len);
        if self.count >= self.capacity {
            self.dropped += 1;
            let mut worst = self.buckets.last_entry().expect("non-empty at capacity");
            if energy >= *worst.key() {
                return false;
            }
            let q = worst.get_mut();
            q.truncate(q.len() - self.words);
            if q.is_empty() {
                worst.remove();
            }
            self.count -= 1;
        }
        let q = self.buckets.entry(energy).or_default();
        for chunk in signs.chunks(64) {
            let w = chunk
                .iter()
                .enumerate()
                .fold(0u64, |w, (b, &x)| w | (((x > 0) as u64) << b));
            q.push_back(w);
        }
        if signs.is_empty() {
            q.push_back(0);
        }
        self.count += 1;
        true
    }

    pub fn pop(&mut self) -> Option<(i64, BinarySequence)> {
        let mut first = self.buckets.first_entry()?;
        let energy = *first.key();
        let q = first.get_mut();
        let signs = unpack_signs(q.drain(..self.words), self.seq_len);
        if q.is_empty() {
            first.remove();
        }
        self.count -= 1;
        Some((energy, BinarySequence::from_signs_unchecked(signs)))
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Entries discarded by the capacity bound.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

#[derive(Clone, Debug)]
pub struct RefineOutcome {
    pub best: Candidate,
    pub pops: u64,
    pub pushes: u64,
    /// `(pop number, best energy)` after each improvement, starting at `(0, E0)`.
    pub log: Vec<(u64, i64)>,
}

pub fn refine(candidate: &Candidate, config: &PqConfig) -> Candidate {
    refine_detailed(candidate, config).best
}

pub fn refine_detailed(candidate: &Candidate, config: &PqConfig) -> RefineOutcome {
    let len = candidate.len();
    let mut frontier = SearchFrontier::new(len, config.capacity);
    let start_hash = frontier.hash(candidate.sequence.signs());
    frontier.mark_visited(start_hash);
    frontier.push(candidate.energy, candidate.sequence.signs());

    let mut best = candidate.clone();
    let mut out = RefineOutcome {
        best: candidate.clone(),
        pops: 0,
        pushes: 1,
        log: vec![(0, candidate.energy)],
    };
    let mut rotor = Rotor::new(len);
    let mut kernel = FlipKernel::default();
    let mut stale = 0u64;

    while stale < config.max_stale {
        stale += 1;
        let Some((pivot_energy, pivot)) = frontier.pop() else {
            break;
        };
        out.pops += 1;
        let mut signs = pivot.into_signs();
        let mut corr = autocorrelation(&BinarySequence::from_signs_unchecked(signs.clone()))
            .correlations()
            .to_vec();
        let pivot_hash = frontier.hash(&signs);
        kernel.load(&signs);

        for i in 0..len {
            let hash = frontier.hash_flip(pivot_hash, i);
            if frontier.is_visited(hash) {
                continue;
            }
            let energy = if config.max_rotation > 0 {
                pivot_energy + kernel.apply(&mut signs, &mut corr, i)
            } else {
                let e = pivot_energy + kernel.delta(&corr, i);
                signs[i] = -signs[i];
                e
            };
            if config.audit {
                assert_eq!(
                    energy,
                    BinarySequence::from_signs_unchecked(signs.clone()).energy(),
                    "neighbour energy drifted"
                );
            }
            frontier.push(energy, &signs);
            frontier.mark_visited(hash);
            out.pushes += 1;
            if energy < best.energy {
                best = Candidate::with_energy(
                    BinarySequence::from_signs_unchecked(signs.clone()),
                    energy,
                    Origin::Refine,
                );
                stale = 0;
                out.log.push((out.pops, energy));
            }
            if config.max_rotation > 0 {
                let r = rotor.push_rotations(
                    &signs,
                    &corr,
                    &mut frontier,
                    config.max_rotation,
                    best.energy,
                    config.audit,
                );
                out.pushes += r.pushed;
                if let Some((e, seq)) = r.improved {
                    best = Candidate::with_energy(seq, e, Origin::Rotation);
                    stale = 0;
                    out.log.push((out.pops, e));
                }
                kernel.apply(&mut signs, &mut corr, i);
            } else {
                signs[i] = -signs[i];
            }
        }
    }
    if best.energy == candidate.energy {
        best = candidate.clone();
    }
    out.best = best;
    out
}

#[derive(Debug, Default)]
struct RotationReport {
    pushed: u64,
    improved: Option<(i64, BinarySequence)>,
}

/// Scratch buffers for rotation chains. One-step rotations update every
/// correlation in O(1):
/// left  `C'_k = C_k - s_0·s_k + s_{L-k}·s_0`,
/// right `C'_k = C_k - s_{L-1-k}·s_{L-1} + s_{L-1}·s_{k-1}`.
#[derive(Debug)]
struct Rotor {
    signs: Vec<i8>,
    corr: Vec<i32>,
}

impl Rotor {
    fn new(len: usize) -> Self {
        Self {
            signs: vec![0; len],
            corr: vec![0; len.saturating_sub(1)],
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_rotations(
        &mut self,
        signs: &[i8],
        corr: &[i32],
        frontier: &mut SearchFrontier,
        max_rotation: usize,
        best_energy: i64,
        audit: bool,
    ) -> RotationReport {
        let n = signs.len();
        let mut report = RotationReport::default();
        let mut threshold = best_energy;
        for left in [true, false] {
            self.signs.copy_from_slice(signs);
            self.corr.copy_from_slice(corr);
            for _ in 0..max_rotation.min(n - 1) {
                let e = if left {
                    self.step_left()
                } else {
                    self.step_right()
                };
                if audit {
                    let scratch =
                        autocorrelation(&BinarySequence::from_signs_unchecked(self.signs.clone()));
                    assert_eq!(
                        scratch.correlations(),
                        &self.corr[..],
                        "rotation correlations drifted"
                    );
                }
                let hash = frontier.hash(&self.signs);
                if !frontier.mark_visited(hash) {
                    continue;
                }
                frontier.push(e, &self.signs);
                report.pushed += 1;
                if e < threshold {
                    threshold = e;
                    report.improved =
                        Some((e, BinarySequence::from_signs_unchecked(self.signs.clone())));
                }
            }
        }
        report
    }

    fn step_left(&mut self) -> i64 {
        let s = &self.signs;
        let n = s.len();
        let first = s[0] as i32;
        let mut energy = 0i64;
        for k in 1..n {
            let c = self.corr[k - 1] - first * s[k] as i32 + s[n - k] as i32 * first;
            self.corr[k - 1] = c;
            energy += (c as i64) * (c as i64);
        }
        self.signs.rotate_left(1);
        energy
    }

    fn step_right(&mut self) -> i64 {
        let s = &self.signs;
        let n = s.len();
        let last = s[n - 1] as i32;
        let mut energy = 0i64;
        for k in 1..n {
            let c = self.corr[k - 1] - s[n - 1 - k] as i32 * last + last * s[k - 1] as i32;
            self.corr[k - 1] = c;
            energy += (c as i64) * (c as i64);
        }
        self.signs.rotate_right(1);
        energy
    }
}

/// Pushes the unvisited rotations of `seq` by `1..=T_r` in both directions
/// and returns how many were enqueued.
pub fn make_rotations(
    seq: &BinarySequence,
    frontier: &mut SearchFrontier,
    max_rotation: usize,
) -> usize {
    if max_rotation == 0 {
        return 0;
    }
    let st = autocorrelation(seq);
    let mut rotor = Rotor::new(seq.len());
    rotor
        .push_rotations(
            seq.signs(),
            st.correlations(),
            frontier,
            max_rotation,
            i64::MIN,
            false,
        )
        .pushed as usize
}

/// The six sequences one end-operator away: drop the first or last element,
/// or add +1/-1 at the front or back.
pub fn apply_length_operators(seq: &BinarySequence) -> Result<Vec<Candidate>> {
    let s = seq.signs();
    if s.len() < 3 {
        return Err(Error::InvalidLength(s.len()));
    }
    let mut out = Vec::with_capacity(6);
    out.push(s[1..].to_vec());
    out.push(s[..s.len() - 1].to_vec());
    for sign in [1i8, -1] {
        let mut front = Vec::with_capacity(s.len() + 1);
        front.push(sign);
        front.extend_from_slice(s);
        out.push(front);
        let mut back = s.to_vec();
        back.push(sign);
        out.push(back);
    }
    Ok(out
        .into_iter()
        .map(|v| Candidate::new(BinarySequence::from_signs_unchecked(v), Origin::Operator))
        .collect())
}

#[derive(Clone, Debug, Default)]
pub struct WorkflowResult {
    /// Best candidate per requested length.
    pub best: BTreeMap<usize, Candidate>,
    /// `(length, energy)` each time a length's best improved.
    pub history: Vec<(usize, i64)>,
    pub refines: usize,
}

/// Alternates refinement and length operators. Lengths between the smallest
/// and largest of `targets ∪ {L}` are explored; each time a length's best
/// improves its operators are applied again and the derived sequences are
/// refined. Only requested lengths are reported.
pub fn refine_with_operators(
    candidate: &Candidate,
    config: &PqConfig,
    targets: &[usize],
) -> WorkflowResult {
    let own = candidate.len();
    let lo = targets.iter().copied().chain([own]).min().unwrap_or(own);
    let hi = targets.iter().copied().chain([own]).max().unwrap_or(own);
    let wanted: BTreeSet<usize> = targets.iter().copied().collect();

    let mut best: BTreeMap<usize, Candidate> = BTreeMap::new();
    let mut result = WorkflowResult::default();
    let mut tried: HashSet<BinarySequence> = HashSet::new();
    let mut work = VecDeque::new();

    let offer = |c: Candidate,
                 best: &mut BTreeMap<usize, Candidate>,
                 result: &mut WorkflowResult|
     -> bool {
        let len = c.len();
        if best.get(&len).is_none_or(|b| c.energy < b.energy) {
            result.history.push((len, c.energy));
            best.insert(len, c);
            true
        } else {
            false
        }
    };

    tried.insert(candidate.sequence.clone());
    let first = refine(candidate, config);
    result.refines += 1;
    offer(first, &mut best, &mut result);
    work.push_back(own);

    while let Some(len) = work.pop_front() {
        let current = best[&len].clone();
        let Ok(derived) = apply_length_operators(&current.sequence) else {
            continue;
        };
        for d in derived {
            if d.len() < lo || d.len() > hi || !tried.insert(d.sequence.clone()) {
                continue;
            }
            let r = refine(&d, config);
            result.refines += 1;
            let l = r.len();
            if offer(r, &mut best, &mut result) {
                work.push_back(l);
            }
        }
    }
    result.best = best
        .into_iter()
        .filter(|(l, _)| wanted.contains(l))
        .collect();
    result.history.retain(|(l, _)| wanted.contains(l));
    result
}
