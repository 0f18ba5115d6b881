use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mpguard::io::{self as mpio, PmpMeta};
use mpguard::synth::experiment::{run_experiment_with_progress, ExperimentConfig};
use mpguard::synth::generate::random_walk;
use mpguard::synth::{generate, PlantedScenario, ScenarioKind};
use mpguard::{
    compute_masked_mp, compute_mp, mp_oracle, pattern_hide, run_attack, AttackConfig, DefenseConfig, MaskSet,
    ScoreVariant, ThresholdDraw,
};
use mpguard::synth::seeds::{derive_seed, rng_from};
use rand::Rng;

/// Matrix profiles, long-pattern location attacks and the PatternHide defense.
///
/// File formats:
///   series   one sample per line, optional `value` header
///   profile  CSV `pos,mpd,mpi` (0-based, 9 significant digits) after
///            `# mp length=L n=N` and, for defended profiles,
///            `# pmp l_attack=.. l_perm=.. seed=..` comment lines
///   truth    JSON {"instances":[{"motif":"short|long","start":..,"end":..}]}
///
/// Exit codes: 1 runtime/IO failure, 2 usage or configuration error,
/// 3 invalid or infeasible data.
#[derive(Parser)]
#[command(name = "mpguard", version, verbatim_doc_comment)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random walk with planted motifs; writes PREFIX.csv and PREFIX.truth.json.
    Gen {
        #[arg(long, value_enum, default_value_t = Kind::Independent)]
        kind: Kind,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        l_util: usize,
        #[arg(long, default_value_t = 300)]
        l_attack: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the matrix profile of a series.
    Mp {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Produce a privacy-aware profile with PatternHide.
    Defend {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        mp: PathBuf,
        #[arg(long)]
        l_attack: usize,
        /// Run-length scale; defaults to a quarter of the profile's subsequence length.
        #[arg(long)]
        l_perm: Option<usize>,
        /// Redraw the run threshold before every position instead of after each replacement.
        #[arg(long)]
        every_position: bool,
        /// Merge overlapping sensitive segments before processing.
        #[arg(long)]
        merge_segments: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate the most likely long-pattern pair from a shared profile.
    Attack {
        #[arg(long)]
        mp: PathBuf,
        /// Attack length.
        #[arg(long)]
        length: usize,
        #[arg(long, value_enum, default_value_t = Score::Location)]
        score: Score,
        #[arg(long)]
        bin_width: Option<usize>,
        #[arg(long)]
        tolerance: Option<usize>,
        /// Subsequence length of the profile, for files without an `# mp length=` line.
        #[arg(long)]
        l_util: Option<usize>,
        /// Output JSON file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scripted benchmark; writes report.json and summary.csv into DIR.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the fast profile against the brute-force oracle on a random walk.
    OracleCheck {
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        length: usize,
        /// Number of random masked profiles to compare besides the unmasked one.
        #[arg(long, default_value_t = 4)]
        masks: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Independent,
    Correlation,
}

impl From<Kind> for ScenarioKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Independent => ScenarioKind::Independent,
            Kind::Correlation => ScenarioKind::Correlation,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Score {
    Location,
    Entropy,
    Distsum,
}

impl From<Score> for ScoreVariant {
    fn from(s: Score) -> Self {
        match s {
            Score::Location => ScoreVariant::Location,
            Score::Entropy => ScoreVariant::Entropy,
            Score::Distsum => ScoreVariant::DistSum,
        }
    }
}

struct Log {
    quiet: bool,
}

impl Log {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<mpguard::Error>() {
            return match e {
                mpguard::Error::Io(_) => 1,
                mpguard::Error::Config(_) => 2,
                _ => 3,
            };
        }
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<Mismatch>().is_some() {
            return 3;
        }
    }
    1
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(UsageError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let log = Log { quiet: cli.quiet };
    let seed = cli.seed;
    match cli.cmd {
        Command::Gen {
            kind,
            n,
            l_util,
            l_attack,
            out,
        } => {
            let scenario = PlantedScenario::new(kind.into(), l_util, l_attack, seed).with_n(n);
            let planted = generate(&scenario)?;
            let series_path = with_suffix(&out, "csv");
            let truth_path = with_suffix(&out, "truth.json");
            mpio::write_series_file(&series_path, &planted.series)
                .with_context(|| format!("writing {}", series_path.display()))?;
            mpio::write_truth_file(&truth_path, &planted.truth)
                .with_context(|| format!("writing {}", truth_path.display()))?;
            log.info(format!(
                "wrote {} ({} samples, {} planted instances) and {}",
                series_path.display(),
                n,
                planted.truth.instances.len(),
                truth_path.display()
            ));
        }
        Command::Mp { series, length, out } => {
            let s = read_series(&series)?;
            let t = Instant::now();
            let mp = compute_mp(&s, length)?;
            log.info(format!("profile of {} positions in {:.2?}", mp.len(), t.elapsed()));
            mpio::write_mp_file(&out, &mp, None).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Defend {
            series,
            mp,
            l_attack,
            l_perm,
            every_position,
            merge_segments,
            out,
        } => {
            let s = read_series(&series)?;
            let loaded = read_mp(&mp, None)?;
            let mut cfg = DefenseConfig::new(loaded.mp.window(), l_attack, seed).with_merged_segments(merge_segments);
            if let Some(p) = l_perm {
                cfg = cfg.with_perm_length(p);
            }
            if every_position {
                cfg = cfg.with_threshold_draw(ThresholdDraw::EveryPosition);
            }
            let t = Instant::now();
            let outcome = pattern_hide(&s, &loaded.mp, &cfg)?;
            log.info(format!(
                "{} sensitive segments, {} replacements in {:.2?}",
                outcome.segments.len(),
                outcome.triggers,
                t.elapsed()
            ));
            let meta = PmpMeta {
                l_attack,
                l_perm: cfg.perm_length,
                seed,
            };
            mpio::write_mp_file(&out, &outcome.pmp, Some(&meta)).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Attack {
            mp,
            length,
            score,
            bin_width,
            tolerance,
            l_util,
            out,
        } => {
            let loaded = read_mp(&mp, l_util)?;
            let mut cfg = AttackConfig::new(length, score.into());
            if let Some(b) = bin_width {
                cfg = cfg.with_bin_width(b);
            }
            if let Some(t) = tolerance {
                cfg = cfg.with_tolerance(t);
            }
            let result = run_attack(&loaded.mp, &cfg)?;
            let json = serde_json::json!({
                "idx1": result.idx1,
                "idx2": result.idx2,
                "score_variant": result.variant,
                "score_max": result.score_max,
            });
            let text = serde_json::to_string_pretty(&json)?;
            match out {
                Some(path) => fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => println!("{text}"),
            }
        }
        Command::Experiment { config, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| UsageError(format!("invalid experiment config {}: {e}", config.display())))?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let t = Instant::now();
            let report = run_experiment_with_progress(&cfg, |done, total| {
                if !log.quiet && (done == total || done % 10 == 0) {
                    eprintln!("{done}/{total} trials ({:.1?})", t.elapsed());
                }
            })?;
            let report_path = out.join("report.json");
            fs::write(&report_path, report.to_json()? + "\n")
                .with_context(|| format!("writing {}", report_path.display()))?;
            let summary_path = out.join("summary.csv");
            let file = File::create(&summary_path).with_context(|| format!("writing {}", summary_path.display()))?;
            report.write_summary_csv(BufWriter::new(file))?;
            let invalid = report.trials.iter().filter(|r| !r.valid).count();
            if invalid > 0 {
                log.info(format!("{invalid} trial records were invalid and excluded from the rates"));
            }
            log.info(format!("wrote {} and {}", report_path.display(), summary_path.display()));
        }
        Command::OracleCheck { n, length, masks } => {
            oracle_check(n, length, masks, seed, &log)?;
        }
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn read_series(path: &Path) -> Result<mpguard::TimeSeries> {
    mpio::read_series_file(path).with_context(|| format!("reading series {}", path.display()))
}

fn read_mp(path: &Path, fallback_window: Option<usize>) -> Result<mpio::LoadedProfile> {
    mpio::read_mp_file(path, fallback_window).with_context(|| format!("reading profile {}", path.display()))
}

#[derive(Debug)]
struct Mismatch(String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Mismatch {}

fn oracle_check(n: usize, length: usize, masks: usize, seed: u64, log: &Log) -> Result<()> {
    if length == 0 || n < 2 * length {
        return Err(UsageError(format!("need n >= 2 * length, got n={n}, length={length}")).into());
    }
    let series = random_walk(n, seed);
    let count = n - length + 1;
    let mut rng = rng_from(derive_seed(&[seed, 1]));
    let mut worst = 0.0f64;
    let mut cases = 0;
    for k in 0..=masks {
        let mut mask = MaskSet::new();
        if k > 0 {
            let a = rng.gen_range(0..count);
            let b = rng.gen_range(a..count.min(a + length));
            mask.insert(a, b);
        }
        let fast = match compute_masked_mp(&series, length, &mask) {
            Ok(mp) => mp,
            Err(mpguard::Error::InfeasibleMask { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let slow = mp_oracle(&series, length, &mask)?;
        if fast.mpi() != slow.mpi() {
            let pos = fast.mpi().iter().zip(slow.mpi()).position(|(a, b)| a != b).unwrap_or(0);
            return Err(Mismatch(format!(
                "index mismatch at position {pos}: fast {} vs oracle {}",
                fast.mpi()[pos],
                slow.mpi()[pos]
            ))
            .into());
        }
        for (a, b) in fast.mpd().iter().zip(slow.mpd()) {
            worst = worst.max((a - b).abs());
        }
        cases += 1;
    }
    if worst > 1e-6 {
        bail!(Mismatch(format!("distance mismatch {worst:.3e} exceeds 1e-6")));
    }
    log.info(format!(
        "fast profile matches the oracle on {cases} profiles (n={n}, length={length}); max distance error {worst:.3e}"
    ));
    Ok(())
}
