//! Command-line front end for `aeplab`.
//!
//! Every command writes plain CSV (or JSON for `pathology`) to `--out` or
//! stdout. Infinities are written as `inf`. Exit codes: 0 success, 1 I/O or
//! internal failure, 2 validation error, 3 resource guard, 4 selftest
//! failure.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use aeplab::aep_harness::{
    classify_pathology, run_ensemble, run_trajectory_with, summarize_ensemble, trajectory_for_path,
    write_trajectory_csv, DEFAULT_WINDOW, TRAJECTORY_CSV_HEADER,
};
use aeplab::ball_prob::{ball_report, BallOptions, BallQuery, DEFAULT_STATE_CAP};
use aeplab::measures::{DistortionMatrix, ProcessModel};
use aeplab::modelfile::ModelFile;
use aeplab::process_rate::{r_inf_report, LambdaMode, RInfReport};
use aeplab::rate_core::{rate, RateEvaluation};
use aeplab::{DistortionLevel, ExtendedReal};
use clap::{Args, Parser, Subcommand};

pub const STATE_CAP_ENV: &str = "AEPLAB_STATE_CAP";

const PERIODIC_FIXTURE: &str = include_str!("../fixtures/periodic.json");
const POINT_ZERO_FIXTURE: &str = include_str!("../fixtures/point_zero.json");
const COIN_FIXTURE: &str = include_str!("../fixtures/coin.json");

#[derive(Debug, Parser)]
#[command(name = "aeplab", version, about = "Mismatched rate functions and distortion-ball probabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// R(P, Q, D) at one level, one CSV row.
    Rate(RateArgs),
    /// R(P, Q, D) over a strictly increasing grid of levels.
    RateCurve(CurveArgs),
    /// Batch of ball queries, one per line: `<word> <codebook|-> <D>`.
    Ball(BallArgs),
    /// L_n along sampled source paths, one block of rows per seed.
    Trajectory(TrajectoryArgs),
    /// Pathology verdict and ensemble summary as JSON.
    Pathology(PathologyArgs),
    /// Certified bounds on the process rate from one block length.
    RinfBounds(BoundsArgs),
    /// Reproduce the periodic counterexample and the Bernoulli benchmark.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Source model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Codebook model file.
    #[arg(long)]
    pub codebook: PathBuf,
    /// File holding `rho`; defaults to the codebook's, then the model's.
    #[arg(long)]
    pub rho: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// Distortion level, decimal or `p/q`.
    #[arg(long)]
    pub distortion: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// Comma-separated levels, strictly increasing.
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BallArgs {
    /// Batch file, or `-` for stdin.
    pub batch: String,
    /// Codebook used for lines whose codebook column is `-`.
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    #[arg(long)]
    pub rho: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long)]
    pub distortion: String,
    #[arg(long)]
    pub n_max: usize,
    /// Comma list and/or ranges `a..b` (end exclusive).
    #[arg(long)]
    pub seeds: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathologyArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long)]
    pub distortion: String,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long)]
    pub seeds: String,
    /// Window length for the "finite in every window" count.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long)]
    pub distortion: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "exact")]
    pub mode: String,
    /// Monte Carlo sample size (mode `mc`).
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Monte Carlo seed (mode `mc`); the first listed seed is used.
    #[arg(long, default_value = "0")]
    pub seeds: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Resource(String),
    Selftest(String),
    Io(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Selftest(_) => 4,
            CliError::Io(_) | CliError::Internal(_) => 1,
        }
    }

    fn validation(field: &str, reason: impl fmt::Display) -> Self {
        CliError::Validation(format!("invalid argument `{field}`: {reason}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Resource(m) | CliError::Selftest(m) | CliError::Io(m) | CliError::Internal(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<aeplab::Error> for CliError {
    fn from(e: aeplab::Error) -> Self {
        use aeplab::Error as E;
        match e {
            E::Resource { .. } => CliError::Resource(e.to_string()),
            E::Consistency(_) => CliError::Internal(e.to_string()),
            E::InvalidArgument { .. } | E::NonUniqueStationary(_) | E::Infeasible { .. } | E::InfiniteMixing(_) => {
                CliError::Validation(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("output: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

/// Prefix errors about a file's contents with the flag that named it.
fn in_flag<T>(flag: &str, r: aeplab::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mapped = CliError::from(e);
        match mapped {
            CliError::Validation(m) => CliError::Validation(format!("{flag}: {m}")),
            other => other,
        }
    })
}

fn load_file(flag: &str, path: &Path) -> CliResult<ModelFile> {
    in_flag(flag, ModelFile::load(path))
}

fn load_process(flag: &str, file: &ModelFile) -> CliResult<ProcessModel> {
    in_flag(flag, file.process())
}

struct Loaded {
    source: ProcessModel,
    codebook: ProcessModel,
    rho: DistortionMatrix,
}

fn resolve_rho(rho: Option<&Path>, fallbacks: &[(&str, &ModelFile)]) -> CliResult<DistortionMatrix> {
    if let Some(path) = rho {
        let file = load_file("--rho", path)?;
        return in_flag("--rho", file.distortion())?
            .ok_or_else(|| CliError::validation("--rho", format!("{} has no \"rho\" field", path.display())));
    }
    for (flag, file) in fallbacks {
        if let Some(m) = in_flag(flag, file.distortion())? {
            return Ok(m);
        }
    }
    Err(CliError::validation(
        "--rho",
        "not given and neither model file has a \"rho\" field",
    ))
}

fn load_models(args: &ModelArgs) -> CliResult<Loaded> {
    let model = load_file("--model", &args.model)?;
    let codebook = load_file("--codebook", &args.codebook)?;
    let rho = resolve_rho(args.rho.as_deref(), &[("--codebook", &codebook), ("--model", &model)])?;
    Ok(Loaded {
        source: load_process("--model", &model)?,
        codebook: load_process("--codebook", &codebook)?,
        rho,
    })
}

fn parse_level(flag: &str, text: &str) -> CliResult<DistortionLevel> {
    text.trim()
        .parse::<DistortionLevel>()
        .map_err(|e| CliError::validation(flag, strip_field(&e)))
}

/// The core error's reason without its own field prefix.
fn strip_field(e: &aeplab::Error) -> String {
    match e {
        aeplab::Error::InvalidArgument { reason, .. } => reason.clone(),
        other => other.to_string(),
    }
}

pub fn parse_grid(text: &str) -> CliResult<Vec<DistortionLevel>> {
    let levels = text
        .split(',')
        .map(|s| parse_level("--grid", s))
        .collect::<CliResult<Vec<_>>>()?;
    if levels.is_empty() {
        return Err(CliError::validation("--grid", "empty"));
    }
    for w in levels.windows(2) {
        if w[1].exact() <= w[0].exact() {
            return Err(CliError::validation(
                "--grid",
                format!("must be strictly increasing, but {} follows {}", w[1], w[0]),
            ));
        }
    }
    Ok(levels)
}

pub fn parse_seeds(text: &str) -> CliResult<Vec<u64>> {
    let bad = |s: &str| CliError::validation("--seeds", format!("cannot parse {s:?}"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad(part))?;
            let b: u64 = b.trim().parse().map_err(|_| bad(part))?;
            if b <= a {
                return Err(CliError::validation("--seeds", format!("empty range {part:?}")));
            }
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if seeds.is_empty() {
        return Err(CliError::validation("--seeds", "at least one seed is required"));
    }
    Ok(seeds)
}

/// Ball options, honouring `AEPLAB_STATE_CAP`.
pub fn ball_options() -> CliResult<BallOptions> {
    match std::env::var(STATE_CAP_ENV) {
        Err(_) => Ok(BallOptions {
            state_cap: DEFAULT_STATE_CAP,
        }),
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(cap) if cap > 0 => Ok(BallOptions { state_cap: cap }),
            _ => Err(CliError::validation(STATE_CAP_ENV, format!("expected a positive integer, got {v:?}"))),
        },
    }
}

fn rate_row(e: &RateEvaluation, d: &DistortionLevel) -> String {
    format!(
        "{},{},{},{}",
        d,
        e.rate,
        e.lambda_star.map(|l| l.to_string()).unwrap_or_default(),
        e.regime
    )
}

const RATE_HEADER: &str = "D,rate,lambda_star,regime";

fn cmd_rate(args: &RateArgs, out: &mut dyn Write) -> CliResult<()> {
    let m = load_models(&args.models)?;
    let d = parse_level("--distortion", &args.distortion)?;
    let e = in_flag("--distortion", rate(&m.source.marginal(), &m.codebook.marginal(), &m.rho, &d))?;
    writeln!(out, "{RATE_HEADER}")?;
    writeln!(out, "{}", rate_row(&e, &d))?;
    Ok(())
}

fn cmd_curve(args: &CurveArgs, out: &mut dyn Write) -> CliResult<()> {
    let m = load_models(&args.models)?;
    let grid = parse_grid(&args.grid)?;
    let (p, q) = (m.source.marginal(), m.codebook.marginal());
    writeln!(out, "{RATE_HEADER}")?;
    for d in &grid {
        let e = in_flag("--grid", rate(&p, &q, &m.rho, d))?;
        writeln!(out, "{}", rate_row(&e, d))?;
    }
    Ok(())
}

pub const BALL_CSV_HEADER: &str = "n,log_prob,l_n,word_rate,finite_flag";

fn cmd_ball(args: &BallArgs, out: &mut dyn Write) -> CliResult<()> {
    let options = ball_options()?;
    let (reader, base): (Box<dyn BufRead>, PathBuf) = if args.batch == "-" {
        (Box::new(BufReader::new(std::io::stdin())), PathBuf::from("."))
    } else {
        let path = Path::new(&args.batch);
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::validation("batch", format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (Box::new(BufReader::new(file)), base)
    };
    let default_file = args
        .codebook
        .as_deref()
        .map(|p| load_file("--codebook", p))
        .transpose()?;
    let explicit_rho = args
        .rho
        .as_deref()
        .map(|p| resolve_rho(Some(p), &[]))
        .transpose()?;

    writeln!(out, "{BALL_CSV_HEADER}")?;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::validation("batch", e))?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let field = format!("batch line {}", i + 1);
        let cols: Vec<&str> = text.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(CliError::validation(&field, "expected `<word> <codebook|-> <D>`"));
        }
        let x = cols[0]
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::validation(&field, format!("cannot parse word {:?}", cols[0])))?;
        let loaded;
        let file = if cols[1] == "-" {
            default_file
                .as_ref()
                .ok_or_else(|| CliError::validation(&field, "codebook is `-` but --codebook was not given"))?
        } else {
            loaded = load_file(&field, &base.join(cols[1]))?;
            &loaded
        };
        let codebook = load_process(&field, file)?;
        let rho = match &explicit_rho {
            Some(r) => r.clone(),
            None => {
                let mut fallbacks = vec![(field.as_str(), file)];
                if let Some(d) = &default_file {
                    fallbacks.push(("--codebook", d));
                }
                resolve_rho(None, &fallbacks)?
            }
        };
        let d = parse_level(&field, cols[2])?;
        let query = in_flag(&field, BallQuery::new(&x, &codebook, &rho, &d))?;
        let report = in_flag(&field, ball_report(&query, options))?;
        writeln!(
            out,
            "{},{},{},{},{}",
            report.n,
            report.ball.log_prob,
            report.ball.l_n,
            report.word_rate,
            report.finite()
        )?;
    }
    Ok(())
}

fn cmd_trajectory(args: &TrajectoryArgs, out: &mut dyn Write) -> CliResult<()> {
    let m = load_models(&args.models)?;
    let d = parse_level("--distortion", &args.distortion)?;
    let seeds = parse_seeds(&args.seeds)?;
    if args.n_max == 0 {
        return Err(CliError::validation("--n-max", "must be at least 1"));
    }
    let options = ball_options()?;
    let runs = in_flag("--model", run_ensemble(&m.source, &m.codebook, &m.rho, &d, args.n_max, &seeds, options))?;
    writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
    for (seed, records) in &runs {
        write_trajectory_csv(out, *seed, records)?;
    }
    Ok(())
}

fn cmd_pathology(args: &PathologyArgs, out: &mut dyn Write) -> CliResult<()> {
    let m = load_models(&args.models)?;
    let d = parse_level("--distortion", &args.distortion)?;
    let seeds = parse_seeds(&args.seeds)?;
    if args.n_max == 0 {
        return Err(CliError::validation("--n-max", "must be at least 1"));
    }
    if args.window == 0 {
        return Err(CliError::validation("--window", "must be at least 1"));
    }
    let options = ball_options()?;
    let verdict = in_flag("--model", classify_pathology(&m.source, &m.codebook, &m.rho, &d))?;
    let runs = in_flag("--model", run_ensemble(&m.source, &m.codebook, &m.rho, &d, args.n_max, &seeds, options))?;
    let r = in_flag("--distortion", rate(&m.source.marginal(), &m.codebook.marginal(), &m.rho, &d))?;
    let summary = summarize_ensemble(&runs, r.rate, args.window)?;
    let doc = serde_json::json!({
        "distortion": d.to_string(),
        "rate": r.rate,
        "verdict": verdict,
        "summary": summary,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> CliResult<()> {
    let m = load_models(&args.models)?;
    let d = parse_level("--distortion", &args.distortion)?;
    let mode = match args.mode.as_str() {
        "exact" => LambdaMode::Exact,
        "mc" => {
            if args.trials < 2 {
                return Err(CliError::validation("--trials", "need at least 2 trials"));
            }
            LambdaMode::MonteCarlo {
                trials: args.trials,
                seed: parse_seeds(&args.seeds)?[0],
            }
        }
        other => return Err(CliError::validation("--mode", format!("expected exact or mc, got {other:?}"))),
    };
    if args.n == 0 {
        return Err(CliError::validation("--n", "must be at least 1"));
    }
    let report = in_flag("--codebook", r_inf_report(&m.source, &m.codebook, &m.rho, &d, args.n, mode))?;
    writeln!(out, "{}", RInfReport::CSV_HEADER)?;
    writeln!(out, "{}", report.csv_row())?;
    Ok(())
}

/// `ln 2 − H_b(1/10)` in nats.
fn bernoulli_benchmark() -> f64 {
    let h = -(0.1f64 * 0.1f64.ln() + 0.9 * 0.9f64.ln());
    std::f64::consts::LN_2 - h
}

fn selftest_periodic() -> CliResult<bool> {
    let chain = in_flag("periodic fixture", ModelFile::parse(PERIODIC_FIXTURE))?;
    let source = load_process("periodic fixture", &chain)?;
    let rho = resolve_rho(None, &[("periodic fixture", &chain)])?;
    let point = load_process("point fixture", &in_flag("point fixture", ModelFile::parse(POINT_ZERO_FIXTURE))?)?;
    let d = DistortionLevel::from_ratio(1, 2)?;
    let n = 200;
    let mut ok = true;
    for first in [0usize, 1] {
        let x: Vec<usize> = (0..n).map(|k| (first + k) % 2).collect();
        let records = trajectory_for_path(&x, &source, &point, &rho, &d, BallOptions::default())?;
        for r in &records {
            let expected = if first == 1 && r.n % 2 == 1 {
                ExtendedReal::PlusInfinity
            } else {
                ExtendedReal::Finite(0.0)
            };
            ok &= r.l_n == expected;
        }
    }
    Ok(ok)
}

fn selftest_bernoulli() -> CliResult<(usize, usize)> {
    let coin = in_flag("coin fixture", ModelFile::parse(COIN_FIXTURE))?;
    let model = load_process("coin fixture", &coin)?;
    let rho = resolve_rho(None, &[("coin fixture", &coin)])?;
    let d = DistortionLevel::from_ratio(1, 10)?;
    let target = bernoulli_benchmark();
    let n = 2000;
    let mut hits = 0;
    let seeds = 0..10u64;
    for seed in seeds.clone() {
        let records = run_trajectory_with(&model, &model, &rho, &d, n, seed, BallOptions::default())?;
        let l = records.last().map(|r| r.l_n).unwrap_or(ExtendedReal::PlusInfinity);
        if (l.to_f64() - target).abs() <= 0.01 {
            hits += 1;
        }
    }
    Ok((hits, seeds.count()))
}

fn cmd_selftest(out: &mut dyn Write) -> CliResult<()> {
    let periodic = selftest_periodic()?;
    writeln!(out, "§III pattern: {}", if periodic { "OK" } else { "FAIL" })?;
    let (hits, total) = selftest_bernoulli()?;
    let bernoulli = hits * 10 >= total * 9;
    writeln!(
        out,
        "Bernoulli rate: {} ({hits}/{total} seeds within 0.01 of {:.7})",
        if bernoulli { "OK" } else { "FAIL" },
        bernoulli_benchmark()
    )?;
    if periodic && bernoulli {
        Ok(())
    } else {
        Err(CliError::Selftest("selftest failed".into()))
    }
}

fn out_path(command: &Command) -> Option<&Path> {
    match command {
        Command::Rate(a) => a.out.as_deref(),
        Command::RateCurve(a) => a.out.as_deref(),
        Command::Ball(a) => a.out.as_deref(),
        Command::Trajectory(a) => a.out.as_deref(),
        Command::Pathology(a) => a.out.as_deref(),
        Command::RinfBounds(a) => a.out.as_deref(),
        Command::Selftest(a) => a.out.as_deref(),
    }
}

/// Run one command, writing to `--out` when given and to `stdout` otherwise.
pub fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let mut buffer = Vec::new();
    let result = match &cli.command {
        Command::Rate(a) => cmd_rate(a, &mut buffer),
        Command::RateCurve(a) => cmd_curve(a, &mut buffer),
        Command::Ball(a) => cmd_ball(a, &mut buffer),
        Command::Trajectory(a) => cmd_trajectory(a, &mut buffer),
        Command::Pathology(a) => cmd_pathology(a, &mut buffer),
        Command::RinfBounds(a) => cmd_bounds(a, &mut buffer),
        Command::Selftest(_) => cmd_selftest(&mut buffer),
    };
    // Selftest output is written even when the selftest fails.
    if result.is_ok() || matches!(result, Err(CliError::Selftest(_))) {
        match out_path(&cli.command) {
            Some(path) => std::fs::write(path, &buffer)
                .map_err(|e| CliError::Io(format!("--out: {}: {e}", path.display())))?,
            None => stdout.write_all(&buffer)?,
        }
    }
    result
}

/// Parse `args`, run, and return the exit code. Messages go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 2;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
