//! `ftdiag`: fault-trajectory test generation and diagnosis for analog
//! circuits.

mod commands;
mod config;
mod svg;

use clap::{Parser, Subcommand};

use commands::{CliError, Measurement};
use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ftdiag",
    version,
    about = "Fault-trajectory test generation and diagnosis for analog circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the golden circuit and every fault; writes dictionary.csv
    Simulate {
        #[command(flatten)]
        run: Overrides,
    },
    /// Search for a test vector; writes ga_log.csv, best_vector.json,
    /// trajectories.csv and intersections.csv
    Optimize {
        #[command(flatten)]
        run: Overrides,
    },
    /// Rank fault hypotheses for a measurement; writes diagnosis.csv
    Diagnose {
        #[command(flatten)]
        run: Overrides,
        /// dB magnitudes at the test-vector frequencies, comma-separated
        #[arg(
            long,
            conflicts_with = "inject",
            required_unless_present = "inject",
            allow_hyphen_values = true
        )]
        measured: Option<String>,
        /// Simulate a fault instead, e.g. R3:+0.2
        #[arg(long)]
        inject: Option<String>,
    },
    /// Render trajectories.csv to trajectories.svg
    Plot {
        #[command(flatten)]
        run: Overrides,
        /// Mark a measured signature point, x,y
        #[arg(long, allow_hyphen_values = true)]
        query: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { run } => commands::simulate(&RunConfig::load(&run)?),
        Command::Optimize { run } => commands::optimize(&RunConfig::load(&run)?),
        Command::Diagnose { run, measured, inject } => {
            let cfg = RunConfig::load(&run)?;
            let m = match (measured, inject) {
                (Some(s), _) => Measurement::Measured(commands::parse_list("--measured", &s)?),
                (None, Some(s)) => Measurement::Inject(s),
                (None, None) => unreachable!("clap requires one of the two"),
            };
            commands::diagnose(&cfg, &m)
        }
        Command::Plot { run, query } => commands::plot(&RunConfig::load(&run)?, query.as_deref()),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
