//! `jd`: randomized joint diagonalization from the command line.
//!
//! Exit codes: 0 on success, 2 on usage, I/O or parse errors, 3 on
//! numerical failure.

mod commands;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jdiag::rng::DEFAULT_SEED;
use jdiag::synth::Algorithm;

#[derive(Parser, Debug)]
#[command(
    name = "jd",
    version,
    about = "Randomized joint diagonalization of symmetric matrix families"
)]
struct Cli {
    /// Print a short summary to standard error.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Jointly diagonalize a family file and write {q, least_squares, per_column, trace}.
    Run(RunArgs),
    /// Accuracy benchmark on synthetic positive definite families (CSV).
    Bench(BenchArgs),
    /// Failure-probability experiment (CSV).
    Failprob(FailprobArgs),
    /// Blind source separation from fourth-order cumulants.
    Bss(BssArgs),
    /// Recover a single topic model from its exact moments.
    Topics(TopicsArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Algo {
    Rjd,
    Drjd,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Rjd => Algorithm::Rjd,
            Algo::Drjd => Algorithm::Drjd,
        }
    }
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

#[derive(Args, Debug)]
struct Common {
    /// Joint diagonalization algorithm.
    #[arg(long, value_enum, default_value = "rjd")]
    algo: Algo,
    /// Number of random trials L.
    #[arg(long, default_value_t = 3)]
    trials: usize,
    /// Master seed (decimal or 0x-prefixed hex).
    #[arg(long, value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Family file: {"n": .., "d": .., "matrices": [[n*n row-major], ...]}.
    family: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Matrix sizes.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    n: Vec<usize>,
    /// Family sizes.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    d: Vec<usize>,
    /// Noise levels.
    #[arg(long, value_delimiter = ',', default_value = "0,1e-5,1e-1")]
    epsilon: Vec<f64>,
    /// Algorithm; both when omitted.
    #[arg(long, value_enum)]
    algo: Option<Algo>,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    /// Repeats per setting, all on the same input family.
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    #[arg(long, value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Fill the mean_time_ms column (output is then not reproducible).
    #[arg(long)]
    timings: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FailprobArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Trial counts L to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    trials: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    repeats: usize,
    /// Magnification factors R > 1; 1 + 10^(i/4), i = 0..12, when omitted.
    #[arg(long, value_delimiter = ',')]
    r_values: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BssArgs {
    /// Signal CSV, one sample per row, no header.
    #[arg(required_unless_present = "demo", conflicts_with = "demo")]
    signals: Option<PathBuf>,
    /// True mixing matrix (CSV); enables the Moreau-Amari index.
    #[arg(long, conflicts_with = "demo")]
    mixing: Option<PathBuf>,
    /// Separate a generated mixture of 3 Laplace sources and 1 Gaussian channel.
    #[arg(long)]
    demo: bool,
    /// Sample count of the demo mixture.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Number of probe matrices; n(n+1)/2 when omitted.
    #[arg(long)]
    probes: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TopicsArgs {
    /// Topic model JSON: {"omega": [...], "mu": [[n floats] per topic]}.
    model: PathBuf,
    /// Perturb the moments by symmetric noise of this aggregate norm.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(a, cli.verbose),
        Command::Bench(a) => commands::bench(a, cli.verbose),
        Command::Failprob(a) => commands::failprob(a, cli.verbose),
        Command::Bss(a) => commands::bss(a, cli.verbose),
        Command::Topics(a) => commands::topics(a, cli.verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jd: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
