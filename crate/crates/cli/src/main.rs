//! `typeb`: enumeration, exact moments, densities and random-matrix
//! simulations for type-B deformed Gaussians.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit code 2.
    Validation(String),
    /// Internal failure or a failed check; exit code 1.
    Failure(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Failure(format!("{}: {e}", path.display()))
    }

    pub fn csv(e: csv::Error) -> Self {
        CliError::Failure(format!("csv: {e}"))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<typeb_core::Error> for CliError {
    fn from(e: typeb_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Failure(e.to_string())
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "typeb", version, about = "Type-B (alpha,q)-Gaussian toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List pair partitions or colored pair partitions with their statistics.
    Enumerate(commands::EnumerateArgs),
    /// Exact vacuum moments.
    Moments(commands::MomentsArgs),
    /// Tabulate the density on a grid.
    Density(commands::DensityArgs),
    /// Density moments by quadrature next to the exact moments.
    DensityMoments(commands::DensityMomentsArgs),
    /// Per-trial values of phi_N(Z_N^r) on random tables.
    Simulate(commands::SimulateArgs),
    /// Check the word-reduction identity against the operator automaton.
    VerifyReduction(commands::VerifyArgs),
    /// Monte Carlo estimate of the weight of one colored pair partition.
    EstimateLambda(commands::EstimateArgs),
    /// Convergence table of phi_N(Z_N^r) over system sizes and orders.
    Converge(commands::ConvergeArgs),
    /// Write the convergence and density comparison CSV files.
    Report(commands::ReportArgs),
}

/// Deformation parameters.
#[derive(Args, Clone, Copy, Debug)]
pub struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
}

/// Output destination.
#[derive(Args, Clone, Debug)]
pub struct OutArgs {
    /// Output file; defaults to $TYPEB_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Enumerate(a) => commands::enumerate(a),
        Command::Moments(a) => commands::moments(a),
        Command::Density(a) => commands::density(a),
        Command::DensityMoments(a) => commands::density_moments(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::VerifyReduction(a) => commands::verify_reduction(a),
        Command::EstimateLambda(a) => commands::estimate_lambda(a),
        Command::Converge(a) => commands::converge(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("typeb: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
