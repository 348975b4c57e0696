//! `chronoslit`: numerical checks of a grid time-operator algebra and a
//! rotating-source temporal double-slit model.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical check
//! above tolerance.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chronoslit",
    version,
    about = "Time-operator algebra checks and temporal double-slit simulation",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify canonical commutators on band-limited probes; writes residuals.csv
    CheckOperators {
        /// Grid size to check (default: the 64/128/256 suite)
        #[arg(long)]
        n: Option<usize>,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve the constraint equation from the config's [constraint] section;
    /// writes psi_magnitude.csv and summary.json
    ConstraintDemo {
        /// Configuration file
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compute the screen pattern (optionally with Monte Carlo detections);
    /// writes pattern.csv and summary.json
    Run {
        /// Configuration file
        #[arg(long)]
        config: PathBuf,
        /// Emission model override: coherent, single:A, single:B, incoherent
        #[arg(long)]
        emission: Option<String>,
        /// Number of Monte Carlo detection events
        #[arg(long)]
        events: Option<u64>,
        /// Random seed for event sampling
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep one parameter and record fringe visibility; writes scan.csv
    Scan {
        /// Configuration file
        #[arg(long)]
        config: PathBuf,
        /// Emission model override: coherent, single:A, single:B, incoherent
        #[arg(long)]
        emission: Option<String>,
        /// Parameter to sweep: delta_t, pulse_sigma, or weight_split
        #[arg(long)]
        scan_param: String,
        /// First swept value
        #[arg(long)]
        scan_from: f64,
        /// Last swept value
        #[arg(long)]
        scan_to: f64,
        /// Number of sweep points (inclusive endpoints)
        #[arg(long)]
        scan_steps: usize,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Cap the rayon worker pool from `CHRONOSLIT_THREADS` when set.
fn configure_threads() {
    if let Ok(raw) = std::env::var("CHRONOSLIT_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => log::warn!("ignoring CHRONOSLIT_THREADS={raw}: expected a positive integer"),
        }
    }
}

fn dispatch(cli: Cli) -> chronoslit_core::Result<bool> {
    match cli.command {
        Command::CheckOperators { n, out } => commands::check_operators(n, &out),
        Command::ConstraintDemo { config, out } => commands::constraint_demo(&config, &out),
        Command::Run {
            config,
            emission,
            events,
            seed,
            out,
        } => commands::run(&config, emission.as_deref(), events, seed, &out),
        Command::Scan {
            config,
            emission,
            scan_param,
            scan_from,
            scan_to,
            scan_steps,
            out,
        } => commands::scan(
            &config,
            emission.as_deref(),
            &scan_param,
            scan_from,
            scan_to,
            scan_steps,
            &out,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("chronoslit: numerical check failed (residual above tolerance)");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("chronoslit: {err}");
            ExitCode::from(1)
        }
    }
}
