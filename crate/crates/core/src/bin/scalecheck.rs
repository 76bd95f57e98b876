use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scalecheck::airquality::YearStart;
use scalecheck::cli::{self, CliError, ExitStatus, OutputFormat, PollutionKind, Report, ReportBody, RunConfig};
use scalecheck::statements::{DEFAULT_REL_TOL, DEFAULT_TRIALS};

#[derive(Parser)]
#[command(name = "scalecheck", version, about = "Index computations and meaningfulness checks")]
struct Args {
    /// Seed for the falsifier's transform streams
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Falsifier trials per statement
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    /// Relative tolerance for equality and order comparisons
    #[arg(long, global = true, default_value_t = DEFAULT_REL_TOL)]
    tolerance: f64,
    /// First day of the reporting year, MM-DD
    #[arg(long, global = true, default_value = "01-01")]
    year_start: YearStart,
    /// Exceedance count whose first-reaching date is reported
    #[arg(long, global = true, default_value_t = 100)]
    threshold: u32,
    /// AQI breakpoint table (TOML)
    #[arg(long, global = true)]
    breakpoints: Option<PathBuf>,
    /// Pollutant tolerance table (TOML)
    #[arg(long, global = true)]
    tolerances: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BMI, Ponderal index and category per row
    Bmi { csv: PathBuf },
    /// AQI sub-indices and summary indices per location and date
    Aqi { csv: PathBuf },
    /// Meaningfulness verdicts for statement documents
    Check {
        #[arg(required = true)]
        documents: Vec<PathBuf>,
    },
    /// Rank and linear correlation of a two-column CSV
    Stats { csv: PathBuf },
    /// Emission, exposure, stress and exceedance aggregates
    PollutionAggregate {
        #[arg(value_enum)]
        kind: PollutionKind,
        csv: PathBuf,
    },
}

fn emit<B: ReportBody>(report: Result<Report<B>, CliError>, format: OutputFormat) -> ExitCode {
    match report {
        Ok(r) => {
            print!("{}", r.render(format));
            ExitCode::from(r.status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ExitStatus::Fatal.code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = RunConfig {
        seed: args.seed,
        trials: args.trials,
        tolerance: args.tolerance,
        year_start: args.year_start,
        threshold_count: args.threshold,
        breakpoints: args.breakpoints,
        tolerances: args.tolerances,
        format: args.format,
    };
    let f = config.format;
    match &args.command {
        Command::Bmi { csv } => emit(cli::cmd_bmi(csv, &config), f),
        Command::Aqi { csv } => emit(cli::cmd_aqi(csv, &config), f),
        Command::Check { documents } => emit(cli::cmd_check(documents, &config), f),
        Command::Stats { csv } => emit(cli::cmd_stats(csv, &config), f),
        Command::PollutionAggregate { kind, csv } => emit(cli::cmd_pollution_aggregate(*kind, csv, &config), f),
    }
}
