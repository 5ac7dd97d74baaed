//! `cssd`: plan two-group experiments that borrow from historical sources.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 validation failure, 3 I/O failure.

mod config;
mod error;
mod report;
mod sweep;

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Mode;
use error::{CliError, Result};
use sweep::Axis;

#[derive(Parser)]
#[command(
    name = "cssd",
    version,
    about = "Bayesian sample sizes with commensurate priors from historical data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Source weights, the collective prior and pairwise distances.
    Prior {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Robust)]
        mode: Mode,
    },
    /// Required sample size for every configured criterion.
    Ssd {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Robust)]
        mode: Mode,
    },
    /// Sample sizes over a grid of one parameter, as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        values: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "robust")]
        modes: Vec<Mode>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo check of every criterion at a given total sample size.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Total sample size, split by the configured allocation.
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 100_000)]
        draws: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Robust)]
        mode: Mode,
    },
    /// Pairwise squared Hellinger distances between the sources.
    Hellinger {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Prior { config, mode } => report::prior_report(&config::load(&config)?, mode),
        Command::Ssd { config, mode } => report::ssd_report(&config::load(&config)?, mode),
        Command::Hellinger { config } => Ok(report::hellinger_report(&config::load(&config)?)),
        Command::Verify {
            config,
            n,
            draws,
            seed,
            mode,
        } => report::verify_report(&config::load(&config)?, mode, n, draws, seed),
        Command::Sweep {
            config,
            axis,
            values,
            modes,
            out,
        } => {
            let design = config::load(&config)?;
            let rows = sweep::run(&design, axis, &values, &modes)?;
            match out {
                None => {
                    let mut buf = Vec::new();
                    sweep::write_csv(&rows, &mut buf).expect("writing to memory cannot fail");
                    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
                }
                Some(path) => {
                    let write_err = |source| CliError::Write {
                        path: path.clone(),
                        source,
                    };
                    let file = File::create(&path).map_err(write_err)?;
                    sweep::write_csv(&rows, BufWriter::new(file)).map_err(write_err)?;
                    Ok(format!("wrote {} rows to {}\n", rows.len(), path.display()))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
