//! `ridepool`: run dispatch simulations, design fleets, and merge reports.
//!
//! Exit codes: 0 success, 1 internal failure, 2 bad configuration or
//! arguments, 3 bad input data, 4 uncoverable nodes during fleet design.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ridepool::model::DispatcherKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{0}")]
    Uncoverable(String),
    #[error("internal error: {0:#}")]
    Internal(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Uncoverable(_) => 4,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "ridepool", version, about = "Ridesharing dispatch simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write metrics, CSV outputs and a manifest.
    Run(RunArgs),
    /// Place stations and size the fleet for a demand file.
    Design(DesignArgs),
    /// Merge finished runs into comparison tables and plot data.
    Report(ReportArgs),
    /// Write a rectangular grid network.
    GenGrid(GenGridArgs),
    /// Write Poisson demand over an existing network.
    GenDemand(GenDemandArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DispatcherArg {
    None,
    Ih,
    Vga,
    VgaLimited,
    VgaPnas,
}

impl From<DispatcherArg> for DispatcherKind {
    fn from(d: DispatcherArg) -> Self {
        match d {
            DispatcherArg::None => DispatcherKind::None,
            DispatcherArg::Ih => DispatcherKind::Ih,
            DispatcherArg::Vga => DispatcherKind::Vga,
            DispatcherArg::VgaLimited => DispatcherKind::VgaLimited,
            DispatcherArg::VgaPnas => DispatcherKind::VgaPnas,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON object with scenario parameters; missing keys take the
    /// dispatcher's defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding nodes.csv and edges.csv.
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub requests: PathBuf,
    #[arg(long)]
    pub stations: PathBuf,
    #[arg(long, value_enum)]
    pub dispatcher: DispatcherArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_delays: bool,
    #[arg(long)]
    pub no_occupancy: bool,
    #[arg(long)]
    pub no_edge_density: bool,
    #[arg(long)]
    pub no_batch_log: bool,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub requests: PathBuf,
    /// Every node must be reachable from a station within this many seconds.
    #[arg(long, default_value_t = 210)]
    pub reach_s: i64,
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction removed from every station per sizing step.
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// CSV with a `node` column restricting where stations may go.
    /// Defaults to every node.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Scenario parameters for the sizing simulation.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directories of earlier `run` invocations.
    #[arg(long, num_args = 0..)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenGridArgs {
    #[arg(long)]
    pub cols: u32,
    #[arg(long)]
    pub rows: u32,
    #[arg(long, default_value_t = 200.0)]
    pub spacing_m: f64,
    #[arg(long, default_value_t = 50.0)]
    pub speed_kmh: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenDemandArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub rate_per_hour: f64,
    #[arg(long)]
    pub duration_s: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Requests CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(2),
            };
        }
    };
    let res = match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Design(a) => commands::design(&a),
        Command::Report(a) => report::report(&a),
        Command::GenGrid(a) => commands::gen_grid(&a),
        Command::GenDemand(a) => commands::gen_demand(&a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ridepool: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
