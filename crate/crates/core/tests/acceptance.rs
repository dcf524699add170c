//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `LABS_ACCEPT_ONLY=1,4,8` runs a subset. `LABS_ACCEPT_455_SECS` shortens
//! the L = 455 budget for local iteration; the pinned value is 3600.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use labs_core::bloom::BloomFilter;
use labs_core::construct::{best_construction, ConstructConfig};
use labs_core::experiment::{experiment_compare, ExperimentConfig};
use labs_core::hex::{hex_decode, hex_encode};
use labs_core::oracle::{oracle_branch_bound, oracle_exhaustive};
use labs_core::pipeline::{run_pipeline, RunConfig, CANDIDATES_FILE, RESULTS_FILE};
use labs_core::pq::PqConfig;
use labs_core::sequence::{
    apply_flip, autocorrelation, flip_delta, merit_from_energy, BinarySequence,
};
use labs_core::skew::{expand_skew, skew_flip_delta, SkewHalf};
use labs_core::Error;

const BARKER_13: [i8; 13] = [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1];

fn brute_correlations(s: &[i8]) -> Vec<i64> {
    (1..s.len())
        .map(|k| (0..s.len() - k).map(|i| (s[i] * s[i + k]) as i64).sum())
        .collect()
}

fn brute_energy(s: &[i8]) -> i64 {
    brute_correlations(s).iter().map(|c| c * c).sum()
}

type Criterion = (usize, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn oracle_correctness() -> Outcome {
    let start = Instant::now();
    let barker_e = brute_energy(&BARKER_13);
    let barker_f = (13.0 * 13.0) / (2.0 * barker_e as f64);
    let got: Vec<i64> = [3, 5, 13]
        .iter()
        .map(|&l| oracle_exhaustive(l).unwrap().0)
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let pass =
        barker_e == 6 && (barker_f - 14.0833).abs() < 5e-5 && got == [1, 2, 6] && secs < 10.0;
    outcome(
        pass,
        format!("E(3,5,13)={got:?}, Barker-13 E={barker_e} F={barker_f:.4}, {secs:.2}s < 10s"),
    )
}

fn kernel_parity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut mismatches = 0u64;
    let mut trials = 0u64;
    for &len in &[50usize, 101, 250, 527] {
        for _ in 0..10_000 {
            let mut s = BinarySequence::random(len, &mut rng).unwrap();
            let mut st = autocorrelation(&s);
            let i = rng.gen_range(0..len);
            let before = brute_energy(s.signs());
            let d = flip_delta(&s, &st, i).unwrap().delta;
            apply_flip(&mut s, &mut st, i).unwrap();
            mismatches +=
                (brute_energy(s.signs()) != before + d || st.energy() != before + d) as u64;
            trials += 1;
        }
        if len % 2 == 1 {
            for _ in 0..10_000 {
                let half = SkewHalf::random(len, &mut rng).unwrap();
                let full = expand_skew(&half);
                let st = autocorrelation(&full);
                let j = rng.gen_range(1..=half.k() + 1);
                let d = skew_flip_delta(&half, &st, j).unwrap().delta;
                let (a, b) = half.mirror_positions(j).unwrap();
                let mut flipped = full.signs().to_vec();
                flipped[a] = -flipped[a];
                if let Some(b) = b {
                    flipped[b] = -flipped[b];
                }
                mismatches += (brute_energy(&flipped) != brute_energy(full.signs()) + d) as u64;
                trials += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 30.0,
        format!("{trials} trials, {mismatches} mismatches, {secs:.2}s < 30s"),
    )
}

fn skew_property() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut bad = 0;
    for _ in 0..1000 {
        let len = 2 * rng.gen_range(1..=263) + 1;
        let full = expand_skew(&SkewHalf::random(len, &mut rng).unwrap());
        let c = brute_correlations(full.signs());
        bad += c.iter().step_by(2).any(|&x| x != 0) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad == 0 && secs < 10.0,
        format!("1000 expansions, {bad} with a nonzero odd lag, {secs:.2}s < 10s"),
    )
}

fn hex_codec() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4E8);
    let mut failures = 0;
    let mut rejected = 0;
    for &len in &[63usize, 64, 450, 527] {
        for _ in 0..1000 {
            let s = BinarySequence::random(len, &mut rng).unwrap();
            failures += (hex_decode(&hex_encode(&s), len).as_ref() != Ok(&s)) as usize;
        }
        let digits = len.div_ceil(4);
        let spare = 4 * digits - len;
        // a set bit just above the top element
        let bad = if spare > 0 {
            format!("{:X}{}", 1 << (4 - spare), "0".repeat(digits - 1))
        } else {
            format!("1{}", "0".repeat(digits))
        };
        rejected += matches!(hex_decode(&bad, len), Err(Error::HexHighBits(_))) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && rejected == 4 && secs < 5.0,
        format!("4000 round trips, {failures} failures, high bits rejected {rejected}/4, {secs:.2}s < 5s"),
    )
}

fn search_quality() -> Outcome {
    let (e21, _) = oracle_exhaustive(21).unwrap();
    let (e27, _) = oracle_branch_bound(27).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for (len, opt) in [(21usize, e21), (27, e27)] {
        let mut hits = 0;
        let mut worst = Duration::ZERO;
        for seed in 0..10u64 {
            let cfg = RunConfig {
                seed,
                time_limit: Some(60.0),
                stop_energy: Some(opt),
                ..RunConfig::for_lengths(&[len])
            };
            let r = run_pipeline(&cfg).unwrap();
            worst = worst.max(r.elapsed);
            hits += (r.best[&len].energy == opt) as usize;
        }
        pass &= hits >= 9;
        parts.push(format!(
            "L={len} optimum E={opt}: {hits}/10 (slowest {:.2}s)",
            worst.as_secs_f64()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn construction() -> Outcome {
    let start = Instant::now();
    let cfg = ConstructConfig::default();
    let f450 = best_construction(450, &cfg)
        .unwrap()
        .unwrap()
        .candidate
        .merit();
    let f491 = best_construction(491, &cfg)
        .unwrap()
        .unwrap()
        .candidate
        .merit();
    let secs = start.elapsed().as_secs_f64();
    let pass = (f450 - 6.1976).abs() <= 0.05 && (f491 - 6.4292).abs() <= 0.05 && secs < 60.0;
    outcome(
        pass,
        format!(
            "F(450)={f450:.4} vs 6.1976±0.05, F(491)={f491:.4} vs 6.4292±0.05, {secs:.2}s < 60s"
        ),
    )
}

fn dual_step() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        length: 71,
        runs: 30,
        ..ExperimentConfig::default()
    };
    let r = experiment_compare(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = r.summary_b.median < r.summary_a.median && r.test.p_value < 0.05 && secs <= 1800.0;
    outcome(
        pass,
        format!(
            "median A={} B={}, p={:.4} < 0.05, {secs:.0}s <= 1800s",
            r.summary_a.median, r.summary_b.median, r.test.p_value
        ),
    )
}

fn bloom_behaviour() -> Outcome {
    let start = Instant::now();
    let n = 1_000_000u64;
    let mut f = BloomFilter::with_capacity(n, 0.01);
    for i in 0..n {
        f.insert(&i.to_le_bytes());
    }
    let false_negatives = (0..n)
        .filter(|i| !f.maybe_contains(&i.to_le_bytes()))
        .count();
    let false_positives = (n..2 * n)
        .filter(|i| f.maybe_contains(&i.to_le_bytes()))
        .count();
    let rate = false_positives as f64 / n as f64;
    let bound = f.expected_fpr(n);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        false_negatives == 0 && rate <= 2.0 * bound && secs < 30.0,
        format!(
            "{n} inserts: {false_negatives} false negatives, FPR {rate:.5} <= 2x{bound:.5} (m={}, k={}), {secs:.2}s < 30s",
            f.num_bits(),
            f.hash_count()
        ),
    )
}

fn large_length() -> Outcome {
    let secs: f64 = std::env::var("LABS_ACCEPT_455_SECS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(3600.0);
    let cfg = RunConfig {
        seed: 455,
        time_limit: Some(secs),
        stop_merit: Some(6.5),
        construct: Some(ConstructConfig::default()),
        pq: Some(PqConfig {
            max_stale: 20_000,
            max_rotation: 0,
            ..PqConfig::default()
        }),
        ..RunConfig::for_lengths(&[455])
    };
    let r = run_pipeline(&cfg).unwrap();
    let best = &r.best[&455];
    let f = merit_from_energy(455, best.energy).unwrap();
    outcome(
        f >= 6.5,
        format!(
            "L=455 best E={} F={f:.4} (origin {}) vs F >= 6.5, budget {secs:.0}s, used {:.0}s, {} walks, {} refines",
            best.energy,
            best.origin,
            r.elapsed.as_secs_f64(),
            r.walks,
            r.refines
        ),
    )
}

fn determinism() -> Outcome {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            seed: 2024,
            max_rounds: Some(1),
            refine_top: 4,
            threads: 1,
            output_dir: Some(dir.path().to_path_buf()),
            ..RunConfig::for_lengths(&[40, 41, 42])
        };
        run_pipeline(&cfg).unwrap();
        let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
        (read(CANDIDATES_FILE), read(RESULTS_FILE))
    };
    let (c1, r1) = run();
    let (c2, r2) = run();
    outcome(
        c1 == c2 && r1 == r2 && !c1.is_empty() && !r1.is_empty(),
        format!(
            "candidates {} bytes identical={}, results {} bytes identical={}",
            c1.len(),
            c1 == c2,
            r1.len(),
            r1 == r2
        ),
    )
}

fn main() {
    let only: Option<BTreeSet<usize>> = std::env::var("LABS_ACCEPT_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [Criterion; 10] = [
        (1, "oracle correctness", oracle_correctness),
        (2, "kernel parity", kernel_parity),
        (3, "skew-symmetry property", skew_property),
        (4, "hex codec", hex_codec),
        (5, "search quality at L=21,27", search_quality),
        (6, "construction reproduction", construction),
        (7, "dual-step superiority at L=71", dual_step),
        (8, "Bloom behaviour", bloom_behaviour),
        (9, "L=455 substitute check", large_length),
        (10, "determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {id:>2} {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
