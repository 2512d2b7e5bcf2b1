//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 malformed input or bad
//! arguments, 3 numerical failure, 4 unsupported regime (λ ≤ 1/3).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stable_deconv_core::harness::{run_clt_experiment, ExperimentSpec};
use stable_deconv_core::io::{read_observations, write_column, write_estimates};
use stable_deconv_core::rng::{stream, Purpose};
use stable_deconv_core::stable::stable_sample_into;
use stable_deconv_core::verify::{run_checks, Mutation, Profile};
use stable_deconv_core::{Error, Estimator, EstimatorConfig, StableParams};

const THREADS_ENV: &str = "STABLE_DECONV_THREADS";

#[derive(Parser)]
#[command(name = "stable-deconv", version, about = "Deconvolution density estimation under symmetric stable noise")]
struct Cli {
    /// Worker threads (default: $STABLE_DECONV_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the density of Y on a grid from a one-column CSV of X = Y + Z.
    Estimate(EstimateArgs),
    /// Run a limit-law experiment described by a JSON spec.
    Simulate(SimulateArgs),
    /// Run the deterministic invariant suite.
    Verify(VerifyArgs),
    /// Draw symmetric stable variates.
    Sample(SampleArgs),
}

#[derive(Args)]
struct NoiseArgs {
    /// Stability exponent λ in (0, 2].
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    /// Rate μ > 0 in exp(-|t|^λ/μ).
    #[arg(long, allow_negative_numbers = true)]
    mu: f64,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Bandwidth.
    #[arg(long, allow_negative_numbers = true)]
    h: f64,
    /// Explicit evaluation point (repeatable); overrides the regular grid.
    #[arg(long = "at", allow_negative_numbers = true)]
    at: Vec<f64>,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    to: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Also write the normalized statistics as a one-column CSV.
    #[arg(long)]
    statistics_csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Tolerance profile: default or strict.
    #[arg(long, default_value = "default")]
    profile: String,
    #[arg(long, default_value = "none", hide = true)]
    mutate: String,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericalFailure(_) => 3,
        Error::UnsupportedRegime { .. } => 4,
        Error::Replicate { source, .. } => exit_code(source),
        _ => 2,
    }
}

fn grid(args: &EstimateArgs) -> Result<Vec<f64>, Error> {
    if !args.at.is_empty() {
        return Ok(args.at.clone());
    }
    if args.points == 0 || !(args.from.is_finite() && args.to.is_finite()) || args.from > args.to {
        return Err(Error::InvalidParameter(format!(
            "grid needs finite --from <= --to and --points >= 1 (got {}, {}, {})",
            args.from, args.to, args.points
        )));
    }
    if args.points == 1 {
        return Ok(vec![args.from]);
    }
    let step = (args.to - args.from) / (args.points - 1) as f64;
    Ok((0..args.points).map(|i| args.from + step * i as f64).collect())
}

fn estimate(args: &EstimateArgs) -> Result<(), Error> {
    let noise = StableParams::new(args.noise.lambda, args.noise.mu)?;
    let cfg = EstimatorConfig::new(args.h, noise)?;
    let grid = grid(args)?;
    let data = read_observations(&args.data)?;
    let values = Estimator::new(cfg).estimate_grid(&data, &grid)?;
    write_estimates(&args.output, &grid, &values)
}

fn read_spec(path: &Path) -> Result<ExperimentSpec, Error> {
    let malformed = |reason: String| Error::Malformed { path: path.display().to_string(), reason };
    let text = fs::read_to_string(path).map_err(|e| malformed(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))
}

fn simulate(args: &SimulateArgs) -> Result<(), Error> {
    let mut spec = read_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.master_seed = seed;
    }
    if args.lambda.is_some() || args.mu.is_some() {
        spec.noise =
            StableParams::new(args.lambda.unwrap_or(spec.noise.lambda()), args.mu.unwrap_or(spec.noise.mu()))?;
    }
    spec.h = args.h.unwrap_or(spec.h);
    spec.n = args.n.unwrap_or(spec.n);
    spec.replicates = args.replicates.unwrap_or(spec.replicates);
    spec.validate()?;
    let report = run_clt_experiment(&spec)?;
    fs::write(&args.output, report.to_json()?)?;
    if let Some(path) = &args.statistics_csv {
        report.write_statistics_csv(path)?;
    }
    eprintln!(
        "{} regime: variance ratio {:.4}, KS {:.4}, {} replicates in {:.1} s",
        report.regime.name(),
        report.variance_ratio,
        report.ks_statistic,
        report.statistics.len(),
        report.wall_time
    );
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<bool, Error> {
    let rows = run_checks(Profile::parse(&args.profile)?, Mutation::parse(&args.mutate)?)?;
    for row in &rows {
        println!("{row}");
    }
    let failed = rows.iter().filter(|r| !r.passed()).count();
    println!("{} checks, {} failed", rows.len(), failed);
    Ok(failed == 0)
}

fn sample(args: &SampleArgs) -> Result<(), Error> {
    let noise = StableParams::new(args.noise.lambda, args.noise.mu)?;
    if args.n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut out = vec![0.0; args.n];
    stable_sample_into(&noise, &mut stream(args.seed, 0, Purpose::Sample), &mut out);
    write_column(&args.output, "z", &out)
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Error> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(Error::InvalidParameter("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    match &cli.command {
        Command::Estimate(a) => estimate(a).map(|_| 0),
        Command::Simulate(a) => simulate(a).map(|_| 0),
        Command::Verify(a) => verify(a).map(|ok| if ok { 0 } else { 1 }),
        Command::Sample(a) => sample(a).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
