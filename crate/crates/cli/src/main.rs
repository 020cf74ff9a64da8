//! Command-line driver: spectra, projector kernels, decay tables, and
//! self-verification for first-order `2r x 2r` differential systems on the
//! unit interval with coupled endpoint conditions.
//!
//! Exit codes: `0` on success, `1` when a computation or verification gate
//! fails, `2` on invalid input.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod checks;
mod commands;
mod config;
mod emit;

use checks::VerifyOptions;
use config::{build_config, Format, RunConfig};

/// Driver error; the variant decides the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: malformed arguments, unreadable or invalid potential files.
    Input(String),
    /// A computation or output step failed.
    Failure(String),
}

impl From<dirac_spectral::error::Error> for CliError {
    fn from(e: dirac_spectral::error::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "dirac-spectral",
    version,
    about = "Spectra, resolvents and spectral projectors of 2r x 2r first-order systems on (0,1)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand.
#[derive(Args, Debug)]
struct CommonArgs {
    /// Potential description: a JSON file path, or `builtin:NAME` with NAME
    /// one of zero, zero2, constant, trig, nonnormal.
    #[arg(long)]
    potential: String,

    /// Inclusive strip range `A..B`; both ends may be negative.
    #[arg(long, default_value = "-4..4", allow_hyphen_values = true)]
    strips: String,

    /// Number of uniform kernel grid nodes.
    #[arg(long, default_value_t = 129)]
    grid: usize,

    /// Starting number of contour quadrature nodes; doubled until stable.
    #[arg(long, default_value_t = 64)]
    contour_nodes: usize,

    /// ODE tolerance for eigenvalue searches and contour solves.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Table format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct BariMarkusArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Also dump the per-strip kernels the table was built from.
    #[arg(long)]
    dump_kernels: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Seed for the randomized suites.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Node count of the cross-validation discretization.
    #[arg(long, default_value_t = 256)]
    oracle_grid: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Locate eigenvalues strip by strip and write the indexed table.
    Spectrum(CommonArgs),
    /// Compute strip projector kernels and dump them with a summary table.
    Projectors(CommonArgs),
    /// Build the strip-projector decay table.
    BariMarkus(BariMarkusArgs),
    /// Run the self-check suites and print a pass/fail matrix.
    Verify(VerifyArgs),
    /// Produce a combined report bundle.
    Report(CommonArgs),
}

fn configure(common: &CommonArgs) -> Result<RunConfig, CliError> {
    build_config(
        &common.potential,
        &common.strips,
        common.grid,
        common.contour_nodes,
        common.tol,
        common.out.clone(),
        common.format,
    )
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Spectrum(common) => {
            commands::cmd_spectrum(&configure(&common)?)?;
            Ok(0)
        }
        Command::Projectors(common) => {
            commands::cmd_projectors(&configure(&common)?)?;
            Ok(0)
        }
        Command::BariMarkus(args) => {
            commands::cmd_bari_markus(&configure(&args.common)?, args.dump_kernels)?;
            Ok(0)
        }
        Command::Verify(args) => {
            let cfg = configure(&args.common)?;
            if args.oracle_grid < 64 {
                return Err(CliError::Input(format!(
                    "oracle grid needs at least 64 nodes, got {}",
                    args.oracle_grid
                )));
            }
            let opts = VerifyOptions {
                seed: args.seed,
                oracle_grid: args.oracle_grid,
            };
            let ok = commands::cmd_verify(&cfg, &opts)?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Report(common) => {
            commands::cmd_report(&configure(&common)?)?;
            Ok(0)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    };
    std::process::exit(code);
}
