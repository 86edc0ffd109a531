//! `lrglm`: fit, sample and bound low-rank GLM posteriors from the command line.
//!
//! Exit status is 0 on success, 2 for invalid configuration or input, and 3
//! when a numerical routine fails (non-convergence, loss of definiteness).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "lrglm",
    version,
    about = "Low-rank approximate Bayesian inference for GLMs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset with a decaying covariate spectrum.
    Simulate(SimulateArgs),
    /// Fit the low-rank posterior and print a JSON summary.
    Fit(FitArgs),
    /// Run Metropolis–Hastings on the low-rank posterior.
    Sample(SampleArgs),
    /// Report the MAP and 2-Wasserstein error bounds as JSON.
    Bounds(BoundsArgs),
    /// Time the fit over a list of ranks and compare with the full-rank fit.
    Benchmark(BenchmarkArgs),
    /// Posterior predictive probabilities for new rows (logistic only).
    Predict(PredictArgs),
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Gaussian,
    Logistic,
    Poisson,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SvdArg {
    Randomized,
    Exact,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    /// Low-rank approximation of rank `--rank`.
    Lr,
    /// Full-rank dense computation (small problems).
    Exact,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum KernelArg {
    /// Gaussian random walk, step tuned during burn-in unless `--step-scale` is given.
    RandomWalk,
    /// Preconditioned Crank–Nicolson (Gaussian prior).
    Pcn,
}

/// Dataset, model and approximation settings shared by the fitting commands.
#[derive(Args, Serialize, Debug, Clone)]
pub struct ModelArgs {
    /// Training data: CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Response column name, or its zero-based index.
    #[arg(long, default_value = "y")]
    pub response_col: String,
    #[arg(long, value_enum, default_value_t = FamilyArg::Logistic)]
    pub family: FamilyArg,
    /// Rank M of the approximation.
    #[arg(long)]
    pub rank: usize,
    /// Isotropic prior variance σ².
    #[arg(long, default_value_t = 1.0)]
    pub prior_var: f64,
    /// File with one prior variance per line (diagonal prior); overrides --prior-var.
    #[arg(long)]
    pub prior_diag: Option<PathBuf>,
    /// Noise precision τ of the gaussian family.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = SvdArg::Randomized)]
    pub svd: SvdArg,
    /// Extra columns in the randomized range finder.
    #[arg(long, default_value_t = 10)]
    pub oversample: usize,
    /// Power iterations in the randomized range finder.
    #[arg(long, default_value_t = 2)]
    pub power_iters: usize,
    /// Gradient tolerance of the MAP optimizer.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = FamilyArg::Logistic)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep the covariate axes aligned with the coordinate axes.
    #[arg(long)]
    pub no_rotate: bool,
    /// Dataset CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the covariates in the binary matrix format.
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Lr)]
    pub method: MethodArg,
    /// Include every marginal variance in the summary.
    #[arg(long)]
    pub variances: bool,
    /// Covariance entry to report, as `i,j`; repeatable.
    #[arg(long = "cov", value_parser = parse_pair)]
    pub cov: Vec<(usize, usize)>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Total iterations, burn-in included.
    #[arg(long, default_value_t = 20_000)]
    pub mcmc_iters: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn_in: usize,
    /// Fixed random-walk step; adaptive from 2.38/√D when omitted.
    #[arg(long)]
    pub step_scale: Option<f64>,
    #[arg(long, value_enum, default_value_t = KernelArg::RandomWalk)]
    pub kernel: KernelArg,
    /// pCN step parameter ρ ∈ (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Chain CSV, one row per retained sample.
    #[arg(long)]
    pub chain_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Skip the full-rank Laplace fit; the report is then prior-relaxed.
    #[arg(long)]
    pub no_dense: bool,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated ranks to sweep; `--rank` is included as well.
    #[arg(long, value_delimiter = ',')]
    pub ranks: Vec<usize>,
    /// Timed repetitions per rank; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Rows to score: CSV with the training covariate columns, response optional.
    #[arg(long)]
    pub test: PathBuf,
    /// Ignore posterior uncertainty and report sigmoid(xᵀμ̂).
    #[arg(long)]
    pub plug_in: bool,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected i,j but got '{s}'"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Bounds(a) => commands::bounds(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
        Command::Predict(a) => commands::predict(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lrglm: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
