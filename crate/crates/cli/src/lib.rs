//! Command-line front end for `modalmatrix`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O failure,
//! 4 numerical degeneracy (zero k-NN radius, isolated query).

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod bench;
mod commands;
pub mod estimator;

pub use bench::{BenchSpec, MethodSpec, SettingSpec};
pub use estimator::{BandwidthArg, KArg};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "MODALMATRIX_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "modalmatrix",
    version,
    about = "Modal clustering of matrix-valued data"
)]
pub struct Cli {
    /// Worker threads (default: $MODALMATRIX_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic dataset from a preset setting.
    Generate(GenerateArgs),
    /// Mean-shift clustering of an mvd file.
    Cluster(ClusterArgs),
    /// Compare two label files with the Fowlkes-Mallows index.
    Evaluate(EvaluateArgs),
    /// Run a Monte Carlo grid described by a bench spec file.
    Bench(BenchArgs),
    /// Log-density of query matrices under an estimator fitted to data.
    Density(DensityArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// key=value file with any of: preset, n, p, t, rho, sigma, seed.
    /// Command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// single | two-balanced | two-imbalanced
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Rows of each observation.
    #[arg(long)]
    pub p: Option<usize>,
    /// Columns of each observation.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimatorKind {
    Fixed,
    Balloon,
    Samplepoint,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum)]
    pub estimator: EstimatorKind,
    /// `auto` (normal-reference gradient rule) or a positive number.
    #[arg(long, default_value = "auto")]
    pub h: BandwidthArg,
    /// `auto0.5`, `auto1`, `auto5` (k = c*sqrt(N)) or an integer.
    #[arg(long, default_value = "auto1")]
    pub k: KArg,
    /// Standardize every entry to zero mean and unit variance first.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    pub merge_factor: f64,
    /// Labels output (default: <input>.labels).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Modes output (default: <input>.modes.mvd).
    #[arg(long)]
    pub modes: Option<PathBuf>,
    /// Also write the run report here; it is always printed to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub labels_a: PathBuf,
    pub labels_b: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub spec: PathBuf,
    /// Per-replicate CSV (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Per-setting median/IQR summary CSV (default: stderr).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] modalmatrix::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use modalmatrix::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Io(_)) => 3,
            CliError::Core(E::DegenerateBandwidth { .. } | E::Isolated(_)) => 4,
            CliError::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be an integer, got '{v}'"))),
        _ => Ok(None),
    }
}

/// Runs a parsed command, writing normal output to `out`.
pub fn run(cli: Cli, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Generate(a) => commands::generate(a, out),
        Command::Cluster(a) => commands::cluster(a, out),
        Command::Evaluate(a) => commands::evaluate(a, out),
        Command::Bench(a) => commands::bench(a, out),
        Command::Density(a) => commands::density(a, out),
    })
}
