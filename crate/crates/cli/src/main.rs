//! Command-line front end: dataset simulation, screening runs, benchmark
//! suites, and report rendering.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 I/O error.

mod commands;
mod config;
mod ingest;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pipscreen::error::Error;

/// Environment variable with the default output directory.
pub const OUT_DIR_ENV: &str = "PIPSCREEN_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "pipscreen",
    version,
    about = "Screen the discrepancy function of a computer model for active inputs"
)]
struct Cli {
    /// Output directory (defaults to $PIPSCREEN_OUT_DIR, then ./pipscreen-out)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads for replication-level parallelism (defaults to all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic benchmark datasets
    Simulate {
        /// Scenario identifier (s41, s42c12, s42c13, s42c14)
        #[arg(long)]
        scenario: String,
        /// Number of replications to write
        #[arg(long)]
        reps: usize,
        /// Master seed
        #[arg(long)]
        seed: u64,
    },
    /// Screen a dataset for inputs active in the discrepancy
    Screen {
        #[command(subcommand)]
        method: ScreenMethod,
    },
    /// Run a replicated benchmark suite over both methods
    Bench(BenchArgs),
    /// Render a results file (screening, RDVS, or benchmark JSON) as text
    Report {
        /// Path to the JSON produced by `screen` or `bench`
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum ScreenMethod {
    /// Posterior inclusion probability screening from a single chain
    Pips(ScreenArgs),
    /// The reference-distribution baseline (repeated chains)
    Rdvs(RdvsArgs),
}

#[derive(Args, Clone)]
struct ScreenArgs {
    /// Dataset CSV with columns x_1..x_p and y (JSON sidecar picked up
    /// automatically)
    #[arg(long)]
    data: PathBuf,

    /// Analysis configuration TOML; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,

    /// Override the configured decision threshold
    #[arg(long)]
    threshold: Option<f64>,

    /// Override the spike shape α
    #[arg(long)]
    alpha: Option<f64>,

    /// Turn calibration on or off regardless of the config
    #[arg(long)]
    calibrate: Option<bool>,

    /// Fixed θ values (comma separated) used when calibration is off
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,

    /// Also export pairwise inclusion probabilities
    #[arg(long)]
    pairwise: bool,
}

#[derive(Args, Clone)]
struct RdvsArgs {
    #[command(flatten)]
    common: ScreenArgs,

    /// Number of fictitious-input repetitions
    #[arg(long = "T")]
    t_reps: Option<usize>,

    /// Classification percentile(s) of the reference distribution
    #[arg(long = "percentile", value_delimiter = ',')]
    percentiles: Option<Vec<f64>>,
}

#[derive(Args, Clone)]
struct BenchArgs {
    /// Suite identifier: table1, table2, or scenarios42
    #[arg(long)]
    suite: String,

    /// Replications per scenario/treatment combination
    #[arg(long, default_value_t = 20)]
    reps: usize,

    /// Master seed
    #[arg(long)]
    seed: u64,

    /// Methods to run (comma separated: pips, rdvs)
    #[arg(long, default_value = "pips,rdvs", value_delimiter = ',')]
    methods: Vec<String>,

    /// PIPS decision thresholds tabulated
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 0.9])]
    thresholds: Vec<f64>,

    /// RDVS replications (the baseline is slower; fewer replications keep
    /// the suite at desk scale)
    #[arg(long, default_value_t = 10)]
    rdvs_reps: usize,

    /// RDVS repetitions per replication
    #[arg(long = "T", default_value_t = 20)]
    t_reps: usize,

    /// RDVS classification percentiles
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.10, 0.15])]
    percentiles: Vec<f64>,

    /// Override the warmup iteration count
    #[arg(long)]
    n_mwg: Option<usize>,

    /// Override the MH iteration count
    #[arg(long)]
    n_mh: Option<usize>,
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::InvalidArgument(_)
        | Error::DimensionMismatch(_)
        | Error::UnknownScenario(_)
        | Error::EnumerationCap { .. } => 2,
        Error::FactorizationFailed { .. }
        | Error::ChainTooShort { .. }
        | Error::EmptyChain
        | Error::ModelEvaluation(_)
        | Error::OptimizationFailed(_) => 3,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::FileFormat { .. } => 4,
    }
}

fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("pipscreen-out"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: could not configure {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }

    let out_dir = resolve_out_dir(cli.out_dir);
    let outcome = match cli.command {
        Command::Simulate { scenario, reps, seed } => {
            commands::simulate::run(&scenario, reps, seed, &out_dir)
        }
        Command::Screen { method } => match method {
            ScreenMethod::Pips(args) => commands::screen::run_pips(&args, &out_dir),
            ScreenMethod::Rdvs(args) => commands::screen::run_rdvs(&args, &out_dir),
        },
        Command::Bench(args) => commands::bench::run(&args, &out_dir),
        Command::Report { input } => commands::report::run(&input),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}
