mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Format, Outcome};
use config::{Options, ProblemConfig};
use error::CliError;

/// Worker threads for grid and replica loops; unset means one per core.
const WORKERS_ENV: &str = "MIXTURE_LDP_WORKERS";

#[derive(Parser)]
#[command(name = "mixture-ldp", version, about = "Rate functions for risk measures of mixtures with estimated weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate function, branch, multiplier and minimizer over an r grid (CSV by default).
    RateCurve(Common),
    /// Compare the rate function with brute-force simplex grid minima (JSON by default).
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Flip the sign of the first constraint function before the grid search.
        #[arg(long)]
        negative_control: bool,
    },
    /// Tail probabilities of the estimation error and their decay rate (CSV by default).
    Simulate(Common),
    /// Second derivative of the rate function at r0 (JSON by default).
    Curvature(Common),
    /// Compare the rate function with the two- and three-component closed forms (JSON by default).
    ClosedFormCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Problem configuration file (JSON).
    config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    r_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simplex grid resolution for the oracle.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    replicas: Option<u64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,
    /// Exact binomial tails instead of Monte Carlo (two components only).
    #[arg(long)]
    exact_binomial: bool,
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Common {
    fn load(&self) -> Result<ProblemConfig, CliError> {
        let flags = Options {
            r_min: self.r_min,
            r_max: self.r_max,
            points: self.points,
            delta: self.delta,
            resolution: self.resolution,
            n_grid: self.n_grid.clone(),
            replicas: self.replicas,
            seed: self.seed,
            exact_binomial: self.exact_binomial.then_some(true),
        };
        ProblemConfig::load(&self.config)?.with_overrides(&flags)
    }
}

fn emit(common: &Common, outcome: Outcome) -> Result<(), CliError> {
    match &common.out {
        Some(path) => std::fs::write(path, &outcome.text)?,
        None => print!("{}", outcome.text),
    }
    outcome.failure.map_or(Ok(()), Err)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::RateCurve(c) => emit(c, commands::rate_curve(&c.load()?, c.format.unwrap_or(Format::Csv))?),
        Command::OracleCheck { common: c, negative_control } => {
            emit(c, commands::oracle_check(&c.load()?, c.format.unwrap_or(Format::Json), *negative_control)?)
        }
        Command::Simulate(c) => emit(c, commands::simulate(&c.load()?, c.format.unwrap_or(Format::Csv))?),
        Command::Curvature(c) => emit(c, commands::curvature(&c.load()?, c.format.unwrap_or(Format::Json))?),
        Command::ClosedFormCheck(c) => emit(c, commands::closed_form_check(&c.load()?, c.format.unwrap_or(Format::Json))?),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| CliError::Parse(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| CliError::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = thread_pool().and_then(|pool| pool.install(|| run(cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
