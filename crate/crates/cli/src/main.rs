mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Randomized rounding for weighted completion time on unrelated machines.
#[derive(Parser, Debug)]
#[command(name = "fairround", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random instance.
    Gen(GenArgs),
    /// Solve the LP and report Monte Carlo objective statistics.
    Solve(SolveArgs),
    /// Run the statistical certification suites.
    Verify(VerifyArgs),
    /// Solve every instance in a directory and aggregate the ratios.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 3)]
    machines: usize,
    #[arg(long, default_value_t = 6)]
    jobs: usize,
    #[arg(long, default_value_t = 1)]
    pmin: u64,
    #[arg(long, default_value_t = 5)]
    pmax: u64,
    #[arg(long, default_value_t = 1.0)]
    wmin: f64,
    #[arg(long, default_value_t = 10.0)]
    wmax: f64,
    /// Probability that a job cannot run on a machine.
    #[arg(long, default_value_t = 0.0)]
    absent: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; defaults to `instance-<seed>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Time horizon of the LP; defaults to Σ_j max_i p_ij.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: Option<u64>,
    /// Also run independent rounding.
    #[arg(long)]
    baseline: bool,
    /// Output directory for `ratio.csv` and `schedule.json`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Instance file; omit when using --synthetic.
    #[arg(required_unless_present = "synthetic", conflicts_with = "synthetic")]
    instance: Option<PathBuf>,
    /// Built-in suite: pairs, bad-rich, grid, identities or all.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: Option<u64>,
    /// CSV report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    tamper_independent: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long)]
    baseline: bool,
    /// CSV report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() -> Result<(), commands::Failure> {
    let Ok(value) = std::env::var("FAIRROUND_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        commands::Failure::usage(format!("FAIRROUND_THREADS must be a positive integer, got {value:?}"))
    })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| commands::Failure::usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::Verify(a) => commands::verify(a),
        Command::Bench(a) => commands::bench(a),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
