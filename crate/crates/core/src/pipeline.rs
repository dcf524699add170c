//! Two-phase orchestration: skew-symmetric walk pool, sieve, priority-queue
//! refinement with length operators, and a best-per-length store.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::RwLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::candidate::Candidate;
use crate::construct::{seed_grid, ConstructConfig};
use crate::error::{Error, Result};
use crate::pq::{refine_with_operators, PqConfig};
use crate::records::{best_index, RecordWriter, ResultRecord};
use crate::saw::{
    default_prefix_len, run_saw_pool_until, CollectSink, SawConfig, DEFAULT_SIEVE_MERIT,
};
use crate::sequence::{energy_limit_for_merit, max_energy_for_merit};

/// Environment variable overriding the configured worker count.
pub const THREADS_ENV: &str = "LABS_THREADS";

pub const CANDIDATES_FILE: &str = "candidates.tsv";
pub const RESULTS_FILE: &str = "results.tsv";
pub const RUN_LOG_FILE: &str = "run.log";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SawSettings {
    pub walkers: usize,
    /// Restriction prefix length; derived from the walker count when unset.
    pub prefix_len: Option<usize>,
    /// `T_i = multiplier · (L+1)/2`.
    pub iter_multiplier: usize,
    /// `E_l` set directly; otherwise derived from `sieve_merit`.
    pub energy_limit: Option<i64>,
    pub sieve_merit: f64,
    pub bloom_fpr: f64,
    pub audit: bool,
}

impl Default for SawSettings {
    fn default() -> Self {
        Self {
            walkers: 4,
            prefix_len: None,
            iter_multiplier: 8,
            energy_limit: None,
            sieve_merit: DEFAULT_SIEVE_MERIT,
            bloom_fpr: 1e-4,
            audit: false,
        }
    }
}

impl SawSettings {
    pub fn saw_config(&self, length: usize, seed: u64, threads: usize) -> SawConfig {
        let prefix_len = self
            .prefix_len
            .unwrap_or_else(|| default_prefix_len(self.walkers))
            .min(length.div_ceil(2));
        SawConfig {
            length,
            prefix_len,
            walkers: self.walkers,
            max_iters: self.iter_multiplier * length.div_ceil(2),
            energy_limit: self
                .energy_limit
                .unwrap_or_else(|| energy_limit_for_merit(length, self.sieve_merit)),
            bloom_fpr: self.bloom_fpr,
            seed,
            walks_per_walker: Some(1),
            time_limit: None,
            candidate_quota: None,
            threads,
            audit: self.audit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub lengths: Vec<usize>,
    pub seed: u64,
    /// Wall-clock budget in seconds.
    pub time_limit: Option<f64>,
    /// Walk rounds; each round runs every walker once per walk length.
    pub max_rounds: Option<u64>,
    /// Stop once every target reaches this energy or lower.
    pub stop_energy: Option<i64>,
    /// Stop once every target reaches this merit factor or higher.
    pub stop_merit: Option<f64>,
    pub threads: usize,
    /// Sieved candidates per round and length passed to refinement.
    pub refine_top: usize,
    pub saw: SawSettings,
    /// `None` disables refinement.
    pub pq: Option<PqConfig>,
    /// `None` disables construction seeding.
    pub construct: Option<ConstructConfig>,
    /// Best grid points per target refined as seeds.
    pub construct_seeds: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lengths: Vec::new(),
            seed: 0,
            time_limit: None,
            max_rounds: None,
            stop_energy: None,
            stop_merit: None,
            threads: 1,
            refine_top: 8,
            saw: SawSettings::default(),
            pq: Some(PqConfig::default()),
            construct: None,
            construct_seeds: 4,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn for_lengths(lengths: &[usize]) -> Self {
        Self {
            lengths: lengths.to_vec(),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::Config(
                "at least one target length is required".into(),
            ));
        }
        if let Some(&l) = self.lengths.iter().find(|&&l| l < 4) {
            return Err(Error::Config(format!(
                "target length {l} is too short (minimum 4)"
            )));
        }
        match self.time_limit {
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(Error::Config("time limit must be positive".into()))
            }
            _ => {}
        }
        if self.max_rounds == Some(0) {
            return Err(Error::Config("round budget must be positive".into()));
        }
        if self.time_limit.is_none() && self.max_rounds.is_none() {
            return Err(Error::Config(
                "a time limit or a round budget is required".into(),
            ));
        }
        if self.refine_top == 0 && self.pq.is_some() {
            return Err(Error::Config(
                "refine_top must be positive when refinement is enabled".into(),
            ));
        }
        if let Some(pq) = &self.pq {
            pq.validate()?;
        }
        if let Some(c) = &self.construct {
            c.validate()?;
        }
        for len in self.walk_lengths() {
            self.saw.saw_config(len, self.seed, 1).validate()?;
        }
        Ok(())
    }

    /// Odd lengths walked: each odd target, and both odd neighbours of each
    /// even target.
    pub fn walk_lengths(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .lengths
            .iter()
            .flat_map(|&l| {
                if l % 2 == 1 {
                    vec![l]
                } else {
                    vec![l - 1, l + 1]
                }
            })
            .collect();
        set.into_iter().collect()
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form, with
    /// output location and worker count excluded.
    pub fn fingerprint(&self) -> Result<String> {
        let canonical = Self {
            output_dir: None,
            threads: 1,
            ..self.clone()
        };
        let digest = Sha256::digest(canonical.to_toml()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    pub fn effective_threads(&self) -> usize {
        thread_override().unwrap_or(self.threads).max(1)
    }

    fn energy_goal(&self, len: usize) -> Option<i64> {
        let by_merit = self.stop_merit.map(|f| max_energy_for_merit(len, f));
        match (self.stop_energy, by_merit) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }
}

pub fn thread_override() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

/// Best candidate per length. Writers are serialized; readers never block
/// each other.
#[derive(Debug, Default)]
pub struct BestStore {
    inner: RwLock<BTreeMap<usize, Candidate>>,
}

impl BestStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `c` if it strictly improves its length's best.
    pub fn offer(&self, c: &Candidate) -> bool {
        let mut map = self.inner.write().unwrap();
        if map.get(&c.len()).is_none_or(|b| c.energy < b.energy) {
            map.insert(c.len(), c.clone());
            true
        } else {
            false
        }
    }

    pub fn energy(&self, len: usize) -> Option<i64> {
        self.inner.read().unwrap().get(&len).map(|c| c.energy)
    }

    pub fn get(&self, len: usize) -> Option<Candidate> {
        self.inner.read().unwrap().get(&len).cloned()
    }

    pub fn snapshot(&self) -> BTreeMap<usize, Candidate> {
        self.inner.read().unwrap().clone()
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipelineResult {
    pub best: BTreeMap<usize, ResultRecord>,
    pub fingerprint: String,
    pub rounds: u64,
    pub walks: u64,
    pub refines: u64,
    pub candidates: u64,
    pub elapsed: Duration,
    /// Every target met its stop rule.
    pub reached_goal: bool,
    /// `(seconds, length, energy)` for each improvement.
    pub history: Vec<(f64, usize, i64)>,
}

struct Outputs {
    candidates: RecordWriter,
    results: RecordWriter,
    log: fs::File,
}

impl Outputs {
    fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            candidates: RecordWriter::append(&dir.join(CANDIDATES_FILE))?,
            results: RecordWriter::append(&dir.join(RESULTS_FILE))?,
            log: OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join(RUN_LOG_FILE))?,
        })
    }
}

struct Run<'a> {
    config: &'a RunConfig,
    fingerprint: String,
    targets: BTreeSet<usize>,
    store: BestStore,
    outputs: Option<Outputs>,
    start: Instant,
    result: PipelineResult,
    pool: rayon::ThreadPool,
}

impl Run<'_> {
    fn log(&mut self, line: &str) -> Result<()> {
        if let Some(out) = &mut self.outputs {
            writeln!(out.log, "{:.3}\t{line}", self.start.elapsed().as_secs_f64())?;
        }
        Ok(())
    }

    fn offer(&mut self, c: &Candidate) -> Result<()> {
        if !self.targets.contains(&c.len()) || !self.store.offer(c) {
            return Ok(());
        }
        let secs = self.start.elapsed().as_secs_f64();
        self.result.history.push((secs, c.len(), c.energy));
        let record = ResultRecord::from_candidate(c, Some(&self.fingerprint));
        if let Some(out) = &mut self.outputs {
            out.results.write(&record)?;
            out.results.flush()?;
        }
        self.log(&format!("best\t{}\t{}\t{}", c.len(), c.energy, c.origin))
    }

    fn goal_reached(&self) -> bool {
        self.targets.iter().all(
            |&l| match (self.config.energy_goal(l), self.store.energy(l)) {
                (Some(goal), Some(e)) => e <= goal,
                _ => false,
            },
        )
    }

    fn out_of_time(&self) -> bool {
        self.config
            .time_limit
            .is_some_and(|t| self.start.elapsed().as_secs_f64() >= t)
    }

    fn remaining(&self) -> Option<Duration> {
        self.config
            .time_limit
            .map(|t| Duration::from_secs_f64(t).saturating_sub(self.start.elapsed()))
    }

    fn should_stop(&self) -> bool {
        self.goal_reached() || self.out_of_time()
    }

    /// Refines `seeds` for the target lengths within one of their own length.
    fn refine_batch(&mut self, seeds: &[Candidate]) -> Result<()> {
        let config = self.config;
        let Some(pq) = &config.pq else {
            return Ok(());
        };
        let targets = &self.targets;
        let results: Vec<_> = self.pool.install(|| {
            seeds
                .par_iter()
                .map(|c| {
                    let near: Vec<usize> = targets
                        .iter()
                        .copied()
                        .filter(|t| t.abs_diff(c.len()) <= 1)
                        .collect();
                    refine_with_operators(c, pq, &near)
                })
                .collect()
        });
        for r in results {
            self.result.refines += r.refines as u64;
            for c in r.best.values() {
                self.offer(c)?;
            }
        }
        Ok(())
    }

    fn seed_constructions(&mut self) -> Result<()> {
        let config = self.config;
        let Some(cfg) = &config.construct else {
            return Ok(());
        };
        let mut seeds = Vec::new();
        for len in self.targets.clone() {
            let grid = seed_grid(len, cfg)?;
            if let Some(d) = &grid.diagnostic {
                let line = format!("construct\t{len}\t{d}");
                self.log(&line)?;
            }
            seeds.extend(
                grid.points
                    .into_iter()
                    .take(self.config.construct_seeds.max(1))
                    .map(|p| p.candidate),
            );
        }
        for c in &seeds {
            self.offer(c)?;
        }
        self.refine_batch(&seeds)
    }

    fn walk_round(&mut self, round: u64, walk_len: usize) -> Result<()> {
        let mut saw =
            self.config
                .saw
                .saw_config(walk_len, self.config.seed, self.config.effective_threads());
        saw.time_limit = self.remaining();
        let sink = CollectSink::new();
        let stop = AtomicBool::new(false);
        let stats = run_saw_pool_until(&saw, &sink, &stop, round)?;
        self.result.walks += stats.walks;

        let mut found = sink.into_candidates();
        found.sort_by(|a, b| {
            a.energy
                .cmp(&b.energy)
                .then_with(|| a.sequence.signs().cmp(b.sequence.signs()))
        });
        if let Some((e, s)) = stats.best {
            self.offer(&Candidate::with_energy(s, e, crate::candidate::Origin::Saw))?;
        }
        let take = if self.config.pq.is_some() {
            self.config.refine_top
        } else {
            0
        };
        let selected: Vec<Candidate> = found.into_iter().take(take).collect();
        self.result.candidates += selected.len() as u64;
        if let Some(out) = &mut self.outputs {
            for c in &selected {
                out.candidates.write_candidate(c)?;
            }
            out.candidates.flush()?;
        }
        self.refine_batch(&selected)
    }
}

/// Runs the two-phase search until the goal, the time limit or the round
/// budget is reached, whichever comes first.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineResult> {
    config.validate()?;
    let fingerprint = config.fingerprint()?;
    let threads = config.effective_threads();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outputs = config
        .output_dir
        .as_deref()
        .map(Outputs::open)
        .transpose()?;

    let mut run = Run {
        config,
        fingerprint: fingerprint.clone(),
        targets: config.lengths.iter().copied().collect(),
        store: BestStore::new(),
        outputs,
        start: Instant::now(),
        result: PipelineResult {
            fingerprint,
            ..PipelineResult::default()
        },
        pool,
    };

    if let Some(dir) = &config.output_dir {
        let path = dir.join(RESULTS_FILE);
        if path.exists() {
            for (len, r) in best_index(&path)? {
                if run.targets.contains(&len) {
                    if let Ok(c) = r.to_candidate() {
                        run.store.offer(&c);
                    }
                }
            }
        }
    }
    let line = format!("start\t{}\tthreads={threads}", run.fingerprint);
    run.log(&line)?;

    run.seed_constructions()?;
    let walk_lengths = config.walk_lengths();
    let mut round = 0;
    while !run.should_stop() && config.max_rounds.is_none_or(|m| round < m) {
        for &w in &walk_lengths {
            if run.should_stop() {
                break;
            }
            run.walk_round(round, w)?;
        }
        round += 1;
        let summary: Vec<String> = run
            .store
            .snapshot()
            .iter()
            .map(|(l, c)| format!("{l}:{}", c.energy))
            .collect();
        let line = format!("round\t{round}\t{}", summary.join(" "));
        run.log(&line)?;
    }

    run.result.rounds = round;
    run.result.reached_goal = run.goal_reached();
    run.result.elapsed = run.start.elapsed();
    let fp = run.fingerprint.clone();
    run.result.best = run
        .store
        .snapshot()
        .values()
        .map(|c| (c.len(), ResultRecord::from_candidate(c, Some(&fp))))
        .collect();
    let line = format!(
        "done\trounds={round}\twalks={}\trefines={}",
        run.result.walks, run.result.refines
    );
    run.log(&line)?;
    Ok(run.result)
}
