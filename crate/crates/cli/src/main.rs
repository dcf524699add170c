use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use labs_core::construct::{seed_grid, ConstructConfig, ZeroConvention};
use labs_core::experiment::{experiment_compare, ExperimentConfig};
use labs_core::oracle::{oracle_branch_bound, oracle_exhaustive, oracle_skew_exhaustive};
use labs_core::pipeline::{run_pipeline, RunConfig, SawSettings, THREADS_ENV};
use labs_core::pq::{refine_with_operators, PqConfig};
use labs_core::records::{read_candidates, verify, RecordWriter, ResultRecord};
use labs_core::saw::{run_saw_pool, CollectSink};
use labs_core::sequence::merit_from_energy;
use labs_core::Candidate;

#[derive(Parser)]
#[command(
    name = "labs",
    version,
    about = "Search for low-autocorrelation binary sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full two-phase search for one or more lengths.
    Solve(SolveArgs),
    /// Skew-symmetric walk pool only; writes the sieved candidate stream.
    Saw(SawArgs),
    /// Priority-queue refinement of every candidate in a file.
    Refine(RefineArgs),
    /// Rotated and extended Legendre sequences.
    Construct(ConstructArgs),
    /// Exact minimum energy for small lengths.
    Oracle(OracleArgs),
    /// Recheck record files; exits nonzero on any mismatch.
    Verify(VerifyArgs),
    /// Walk-only versus walk-plus-refinement comparison.
    Experiment(ExperimentArgs),
}

#[derive(Args, Clone)]
struct WalkArgs {
    /// Walkers in the pool.
    #[arg(long)]
    walkers: Option<usize>,
    /// Restriction prefix length p.
    #[arg(long)]
    prefix_len: Option<usize>,
    /// Walk length T_i as a multiple of (L+1)/2.
    #[arg(long)]
    iter_mult: Option<usize>,
    /// Sieve energy limit E_l.
    #[arg(long, conflicts_with = "target_merit")]
    energy_limit: Option<i64>,
    /// Sieve via a merit factor: E_l = ceil(L²/(2F)).
    #[arg(long)]
    target_merit: Option<f64>,
}

impl WalkArgs {
    fn apply(&self, s: &mut SawSettings) {
        if let Some(w) = self.walkers {
            s.walkers = w;
        }
        if self.prefix_len.is_some() {
            s.prefix_len = self.prefix_len;
        }
        if let Some(m) = self.iter_mult {
            s.iter_multiplier = m;
        }
        if self.energy_limit.is_some() {
            s.energy_limit = self.energy_limit;
        }
        if let Some(f) = self.target_merit {
            s.sieve_merit = f;
        }
    }
}

#[derive(Args, Clone)]
struct RefineKnobs {
    /// T_u: pops without improvement before stopping.
    #[arg(long)]
    max_stale: Option<u64>,
    /// T_r: largest rotation offset.
    #[arg(long)]
    max_rotation: Option<usize>,
}

impl RefineKnobs {
    fn apply(&self, pq: &mut PqConfig) {
        if let Some(u) = self.max_stale {
            pq.max_stale = u;
        }
        if let Some(r) = self.max_rotation {
            pq.max_rotation = r;
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    length: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time: Option<f64>,
    /// Walk rounds budget.
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long)]
    stop_energy: Option<i64>,
    #[arg(long)]
    stop_merit: Option<f64>,
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Sieved candidates refined per round.
    #[arg(long)]
    refine_top: Option<usize>,
    /// Skip refinement entirely.
    #[arg(long)]
    no_refine: bool,
    /// Seed refinement with Legendre constructions.
    #[arg(long)]
    construct: bool,
    #[command(flatten)]
    walk: WalkArgs,
    #[command(flatten)]
    refine: RefineKnobs,
    /// Directory for candidates.tsv, results.tsv and run.log.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SawArgs {
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Walks per walker.
    #[arg(long, default_value_t = 1)]
    walks: u64,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, env = THREADS_ENV, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    walk: WalkArgs,
    /// Candidate stream file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    /// Candidate stream to refine.
    #[arg(long)]
    input: PathBuf,
    /// Lengths reported besides each candidate's own, comma separated.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<usize>,
    #[command(flatten)]
    refine: RefineKnobs,
    /// Result file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Zero {
    Plus,
    Minus,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long)]
    length: usize,
    /// Evenly spaced rotation fractions per prime instead of every offset.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum, default_value_t = Zero::Minus)]
    zero: Zero,
    /// Write every grid point as a candidate stream.
    #[arg(long)]
    emit_candidates: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMethod {
    Exhaustive,
    BranchBound,
    Skew,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    length: usize,
    #[arg(long, value_enum, default_value_t = OracleMethod::Exhaustive)]
    method: OracleMethod,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 71)]
    length: usize,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Walk rounds per run and arm.
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    refine_top: Option<usize>,
    #[command(flatten)]
    walk: WalkArgs,
    #[command(flatten)]
    refine: RefineKnobs,
    /// Per-run energies as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

type RecordSink = Box<dyn FnMut(&ResultRecord) -> Result<()>>;

fn record_sink(path: Option<&PathBuf>) -> Result<RecordSink> {
    Ok(match path {
        Some(p) => {
            let mut w = RecordWriter::create(p)
                .with_context(|| format!("cannot create {}", p.display()))?;
            Box::new(move |r| Ok(w.write(r)?))
        }
        None => Box::new(|r| {
            writeln!(io::stdout().lock(), "{}", r.to_line())?;
            Ok(())
        }),
    })
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("cannot load {}", p.display()))?,
        None => RunConfig::default(),
    };
    if !args.length.is_empty() {
        cfg.lengths = args.length.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.time.is_some() {
        cfg.time_limit = args.time;
    }
    if args.rounds.is_some() {
        cfg.max_rounds = args.rounds;
    }
    if args.stop_energy.is_some() {
        cfg.stop_energy = args.stop_energy;
    }
    if args.stop_merit.is_some() {
        cfg.stop_merit = args.stop_merit;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(n) = args.refine_top {
        cfg.refine_top = n;
    }
    if args.no_refine {
        cfg.pq = None;
    } else if let Some(pq) = &mut cfg.pq {
        args.refine.apply(pq);
    }
    if args.construct && cfg.construct.is_none() {
        cfg.construct = Some(ConstructConfig::default());
    }
    args.walk.apply(&mut cfg.saw);
    if args.out.is_some() {
        cfg.output_dir = args.out.clone();
    }
    if cfg.time_limit.is_none() && cfg.max_rounds.is_none() {
        cfg.time_limit = Some(60.0);
    }

    let result = run_pipeline(&cfg)?;
    let mut out = io::stdout().lock();
    for r in result.best.values() {
        writeln!(out, "{}", r.to_line())?;
    }
    eprintln!(
        "rounds={} walks={} refines={} elapsed={:.2}s fingerprint={}",
        result.rounds,
        result.walks,
        result.refines,
        result.elapsed.as_secs_f64(),
        result.fingerprint
    );
    Ok(ExitCode::SUCCESS)
}

fn saw(args: SawArgs) -> Result<ExitCode> {
    let mut settings = SawSettings::default();
    args.walk.apply(&mut settings);
    let mut cfg = settings.saw_config(args.length, args.seed, args.threads);
    cfg.walks_per_walker = Some(args.walks);
    cfg.time_limit = args.time.map(std::time::Duration::from_secs_f64);
    let sink = CollectSink::new();
    let stats = run_saw_pool(&cfg, &sink)?;
    let mut found = sink.into_candidates();
    found.sort_by(|a, b| {
        a.energy
            .cmp(&b.energy)
            .then_with(|| a.sequence.signs().cmp(b.sequence.signs()))
    });
    let mut write = record_sink(args.out.as_ref())?;
    for c in &found {
        write(&ResultRecord::from_candidate(c, None))?;
    }
    let best = stats
        .best
        .as_ref()
        .map_or(String::from("-"), |(e, _)| e.to_string());
    eprintln!(
        "walks={} iterations={} candidates={} best_energy={best}",
        stats.walks,
        stats.iterations,
        found.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn refine(args: RefineArgs) -> Result<ExitCode> {
    let mut pq = PqConfig::default();
    args.refine.apply(&mut pq);
    pq.validate()?;
    let input = read_candidates(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let mut write = record_sink(args.out.as_ref())?;
    for c in &input {
        let mut targets = args.targets.clone();
        targets.push(c.len());
        for best in refine_with_operators(c, &pq, &targets).best.values() {
            write(&ResultRecord::from_candidate(best, None))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn construct(args: ConstructArgs) -> Result<ExitCode> {
    let cfg = ConstructConfig {
        rotation_steps: args.grid,
        zero: match args.zero {
            Zero::Plus => ZeroConvention::Plus,
            Zero::Minus => ZeroConvention::Minus,
        },
        ..ConstructConfig::default()
    };
    let grid = seed_grid(args.length, &cfg)?;
    if let Some(d) = &grid.diagnostic {
        bail!("{d}");
    }
    if let Some(p) = &args.emit_candidates {
        let mut w = RecordWriter::create(p)?;
        for g in &grid.points {
            w.write_candidate(&g.candidate)?;
        }
        w.flush()?;
    }
    let best = &grid.points[0];
    println!(
        "{}",
        ResultRecord::from_candidate(&best.candidate, None).to_line()
    );
    eprintln!(
        "prime={} offset={} appended={} grid_points={}",
        best.prime,
        best.offset,
        best.appended,
        grid.points.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn oracle(args: OracleArgs) -> Result<ExitCode> {
    let (e, seq) = match args.method {
        OracleMethod::Exhaustive => oracle_exhaustive(args.length)?,
        OracleMethod::BranchBound => oracle_branch_bound(args.length)?,
        OracleMethod::Skew => oracle_skew_exhaustive(args.length)?,
    };
    let c = Candidate::new(seq, labs_core::Origin::Refine);
    debug_assert_eq!(c.energy, e);
    println!("{}", ResultRecord::from_candidate(&c, None).to_line());
    Ok(ExitCode::SUCCESS)
}

fn verify_files(args: VerifyArgs) -> Result<ExitCode> {
    let mut clean = true;
    for path in &args.files {
        let report = verify(path).with_context(|| format!("cannot read {}", path.display()))?;
        for (line, msg) in &report.malformed {
            println!("{}:{line}: malformed: {msg}", path.display());
        }
        for (line, msg) in &report.mismatches {
            println!("{}:{line}: mismatch: {msg}", path.display());
        }
        println!(
            "{}: {} records, {} mismatches, {} malformed",
            path.display(),
            report.checked,
            report.mismatches.len(),
            report.malformed.len()
        );
        clean &= report.is_clean();
    }
    Ok(if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig {
        length: args.length,
        runs: args.runs,
        seed: args.seed,
        ..ExperimentConfig::default()
    };
    if let Some(r) = args.rounds {
        cfg.rounds = r;
    }
    if let Some(n) = args.refine_top {
        cfg.refine_top = n;
    }
    args.walk.apply(&mut cfg.saw);
    if let Some(pq) = &mut cfg.pq {
        args.refine.apply(pq);
    }
    let r = experiment_compare(&cfg)?;
    if let Some(p) = &args.csv {
        r.save_csv(p)?;
    }
    for (name, s) in [
        ("A walk only", &r.summary_a),
        ("B walk+refine", &r.summary_b),
    ] {
        println!(
            "{name}: median={} q1={} q3={} min={} max={} (F at median {:.4})",
            s.median,
            s.q1,
            s.q3,
            s.min,
            s.max,
            merit_from_energy(r.length, s.median.round() as i64)?
        );
    }
    println!(
        "rank-sum U={} z={:.4} p={:.3e}",
        r.test.u, r.test.z, r.test.p_value
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Saw(a) => saw(a),
        Command::Refine(a) => refine(a),
        Command::Construct(a) => construct(a),
        Command::Oracle(a) => oracle(a),
        Command::Verify(a) => verify_files(a),
        Command::Experiment(a) => experiment(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
