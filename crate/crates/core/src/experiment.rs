//! Paired comparison of walk-only search against walk plus refinement.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::splitmix64;
use crate::pipeline::{run_pipeline, RunConfig, SawSettings};
use crate::pq::PqConfig;
use crate::sequence::merit_from_energy;
use crate::stats::{quartiles, rank_sum_test, RankSum};

pub const MIN_RUNS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub length: usize,
    pub runs: usize,
    /// Walk rounds per run, identical for both arms.
    pub rounds: u64,
    pub saw: SawSettings,
    /// Refinement for arm B; `None` makes both arms identical. Defaults to a
    /// long stale budget without rotations.
    pub pq: Option<PqConfig>,
    pub refine_top: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            length: 71,
            runs: 30,
            rounds: 4,
            saw: SawSettings::default(),
            pq: Some(PqConfig {
                max_stale: 100_000,
                max_rotation: 0,
                ..PqConfig::default()
            }),
            refine_top: 8,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmSummary {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub min: i64,
    pub max: i64,
}

impl ArmSummary {
    fn of(energies: &[i64]) -> Self {
        let v: Vec<f64> = energies.iter().map(|&e| e as f64).collect();
        let (q1, median, q3) = quartiles(&v);
        Self {
            q1,
            median,
            q3,
            min: *energies.iter().min().unwrap(),
            max: *energies.iter().max().unwrap(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub length: usize,
    /// Best energy per run, walk pool only.
    pub arm_a: Vec<i64>,
    /// Best energy per run, walk pool plus refinement.
    pub arm_b: Vec<i64>,
    pub summary_a: ArmSummary,
    pub summary_b: ArmSummary,
    /// Arm B tested against arm A.
    pub test: RankSum,
}

impl ExperimentResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "run,arm,energy,merit")?;
        for (arm, values) in [("A", &self.arm_a), ("B", &self.arm_b)] {
            for (run, &e) in values.iter().enumerate() {
                writeln!(
                    out,
                    "{run},{arm},{e},{:.6}",
                    merit_from_energy(self.length, e)?
                )?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

fn run_config(cfg: &ExperimentConfig, run: usize, pq: Option<PqConfig>) -> RunConfig {
    RunConfig {
        lengths: vec![cfg.length],
        seed: splitmix64(cfg.seed.wrapping_add(run as u64)),
        max_rounds: Some(cfg.rounds),
        threads: cfg.threads,
        refine_top: cfg.refine_top,
        saw: cfg.saw.clone(),
        pq,
        ..RunConfig::default()
    }
}

/// Runs both arms with the same seeds per run, so arm B differs from arm A
/// only by the refinement step.
pub fn experiment_compare(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.runs < MIN_RUNS {
        return Err(Error::Config(format!(
            "{} runs per arm is too few for a rank-sum test (minimum {MIN_RUNS})",
            cfg.runs
        )));
    }
    if cfg.rounds == 0 {
        return Err(Error::Config("walk budget must be positive".into()));
    }
    let best = |rc: RunConfig| -> Result<i64> {
        let r = run_pipeline(&rc)?;
        r.best
            .get(&cfg.length)
            .map(|b| b.energy)
            .ok_or_else(|| Error::Config("run produced no result".into()))
    };
    let mut arm_a = Vec::with_capacity(cfg.runs);
    let mut arm_b = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        arm_a.push(best(run_config(cfg, run, None))?);
        arm_b.push(best(run_config(cfg, run, cfg.pq.clone()))?);
    }
    let as_f64 = |v: &[i64]| v.iter().map(|&e| e as f64).collect::<Vec<_>>();
    Ok(ExperimentResult {
        length: cfg.length,
        summary_a: ArmSummary::of(&arm_a),
        summary_b: ArmSummary::of(&arm_b),
        test: rank_sum_test(&as_f64(&arm_b), &as_f64(&arm_a)),
        arm_a,
        arm_b,
    })
}
