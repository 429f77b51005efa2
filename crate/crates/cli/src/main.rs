//! `gmrank` command-line tool.
//!
//! Every command writes one output directory holding its CSV files and a
//! `manifest.json` describing inputs, parameters, version and run time.
//! Damping factors are always given as `1 - alpha`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad input or arguments,
//! 3 an iterative solver did not converge (results are still written and
//! flagged in the manifest).

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gmrank", version, about = "Google matrix spectra, gaps and PageRank of directed networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split the network into invariant subspaces and core space.
    Decompose(DecomposeCmd),
    /// Eigenvalues of the subspace blocks plus Arnoldi values of the core.
    Spectrum(SpectrumCmd),
    /// PageRank (or CheiRank with --reverse) at a given 1 - alpha.
    Pagerank(PagerankCmd),
    /// Gap 1 - lambda_1 of the core block.
    Gap(GapCmd),
    /// Core weight and fidelity across a grid of 1 - alpha.
    Scan(ScanCmd),
    /// Subspace size distribution and rank-curve fits.
    Stats(StatsCmd),
    /// Write a seeded synthetic network as an edge list.
    Synth(SynthCmd),
}

/// Options shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunOpts {
    /// Output directory (created if missing).
    #[arg(short, long)]
    pub out: PathBuf,
    /// Worker threads for matrix-vector products; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Sequential products and reductions, bit-reproducible outputs.
    #[arg(long)]
    pub deterministic: bool,
    /// Also write whitespace separated two-column `.dat` files.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecompArgs {
    /// Closure budget as a fraction of N.
    #[arg(long, default_value_t = 0.1)]
    pub budget_b: f64,
    /// Lower bound on the closure budget in nodes.
    #[arg(long, default_value_t = 4096)]
    pub min_cutoff: usize,
    /// Reuse this decomposition CSV instead of decomposing.
    #[arg(long)]
    pub decomposition: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// Value of 1 - alpha, in (0, 1].
    #[arg(long, default_value_t = 0.15)]
    pub one_minus_alpha: f64,
    /// Power steps per cycle.
    #[arg(long, default_value_t = 10_000)]
    pub n_i: usize,
    /// Arnoldi dimension.
    #[arg(long, default_value_t = 100)]
    pub n_a: usize,
    /// Residual tolerance on |P - G P|_1.
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_cycles: usize,
    /// Switch to Arnoldi early when the residual stalls.
    #[arg(long)]
    pub adaptive: bool,
    /// Use refined Ritz vectors.
    #[arg(long)]
    pub refined: bool,
    /// Skip the final iterative refinement of the converged vector.
    #[arg(long)]
    pub no_polish: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecomposeCmd {
    /// Edge list (`src dst` per line).
    pub input: PathBuf,
    #[command(flatten)]
    pub decomp: DecompArgs,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumCmd {
    pub input: PathBuf,
    /// Arnoldi dimension for the core block.
    #[arg(long, default_value_t = 100)]
    pub n_a: usize,
    /// Largest subspace handled by the dense eigensolver.
    #[arg(long, default_value_t = gmrank::spectral::DEFAULT_DENSE_LIMIT)]
    pub dense_limit: usize,
    #[command(flatten)]
    pub decomp: DecompArgs,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PagerankCmd {
    pub input: PathBuf,
    /// Rank the transposed network (CheiRank).
    #[arg(long)]
    pub reverse: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub decomp: DecompArgs,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMethodArg {
    ProjectedPower,
    Arnoldi,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GapCmd {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = GapMethodArg::ProjectedPower)]
    pub method: GapMethodArg,
    /// Arnoldi dimension (seeding pass or the Arnoldi method).
    #[arg(long, default_value_t = 200)]
    pub n_a: usize,
    #[arg(long, default_value_t = 1e-13)]
    pub eps1: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps2: f64,
    #[arg(long, default_value_t = 2_000_000)]
    pub max_iter: usize,
    /// Spectral shift of the projected power iteration.
    #[arg(long, default_value_t = 1.0)]
    pub shift: f64,
    #[command(flatten)]
    pub decomp: DecompArgs,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanCmd {
    pub input: PathBuf,
    /// Comma separated values of 1 - alpha.
    #[arg(
        long = "one-minus-alpha",
        value_delimiter = ',',
        default_value = "1e-1,1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8"
    )]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub n_i: usize,
    #[arg(long, default_value_t = 100)]
    pub n_a: usize,
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_cycles: usize,
    #[command(flatten)]
    pub decomp: DecompArgs,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StatsCmd {
    pub input: PathBuf,
    /// Also solve PageRank and fit the rescaled rank curve.
    #[arg(long)]
    pub rank: bool,
    /// Value of 1 - alpha for the rank curve.
    #[arg(long, default_value_t = 1e-8)]
    pub one_minus_alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n_i: usize,
    #[arg(long, default_value_t = 100)]
    pub n_a: usize,
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_cycles: usize,
    /// Window of K / N_s for the rank fit.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.01, 0.5])]
    pub rank_window: Vec<f64>,
    #[command(flatten)]
    pub decomp: DecompArgs,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleArg {
    /// Each ordered pair linked with probability p.
    Uniform,
    /// Invariant cycles with power-law sizes fed from a random core.
    Planted,
    /// Growing network with preferential attachment.
    Preferential,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthCmd {
    #[arg(long, value_enum)]
    pub ensemble: EnsembleArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Nodes (uniform, preferential).
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Link probability (uniform).
    #[arg(long, default_value_t = 0.05)]
    pub p: f64,
    /// Out-links per new node (preferential).
    #[arg(long, default_value_t = 3)]
    pub out_links: usize,
    /// Number of planted subspaces.
    #[arg(long, default_value_t = 1000)]
    pub subspaces: usize,
    /// Tail exponent of the planted size distribution.
    #[arg(long, default_value_t = 1.5)]
    pub b: f64,
    /// Scale of planted subspace sizes.
    #[arg(long, default_value_t = 20.0)]
    pub mean_dim: f64,
    /// Largest planted subspace.
    #[arg(long, default_value_t = 100_000)]
    pub max_dim: usize,
    /// Core nodes of the planted ensemble.
    #[arg(long, default_value_t = 200)]
    pub core: usize,
    /// Add a dangling node hanging off the core.
    #[arg(long)]
    pub dangling: bool,
    #[arg(short, long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(commands::Outcome::Done) => ExitCode::SUCCESS,
        Ok(commands::Outcome::NotConverged) => {
            eprintln!("error: solver did not converge; results written and flagged");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<commands::Outcome, CliError> {
    match command {
        Command::Decompose(c) => commands::decompose(&c),
        Command::Spectrum(c) => commands::spectrum(&c),
        Command::Pagerank(c) => commands::pagerank(&c),
        Command::Gap(c) => commands::gap(&c),
        Command::Scan(c) => commands::scan(&c),
        Command::Stats(c) => commands::stats(&c),
        Command::Synth(c) => commands::synth(&c),
    }
}
