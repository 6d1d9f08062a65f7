//! `bellbench` command-line front end.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Failure;

/// Exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const DATA: u8 = 3;
    pub const NOT_CONVERGED: u8 = 4;
}

#[derive(Parser, Debug)]
#[command(name = "bellbench", version, about = "CHSH Bell-test simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in parameter set used when no config file is given.
    #[arg(long, value_enum)]
    pub preset: Option<PresetName>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sets: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Directory for output files; overrides `output.dir`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Paper,
    Ideal,
}

impl PresetName {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Paper => "paper",
            PresetName::Ideal => "ideal",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Event,
    Aggregate,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Pr,
    Local,
    Quantum,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the configured experiment; writes the records CSV, the
    /// report and the resolved configuration.
    Simulate(RunArgs),
    /// Analyze a records CSV under the configured apparatus.
    Analyze {
        records: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the alternating fringe-scan angle search.
    Optimize(RunArgs),
    /// Evaluate a behavior table against the correlation bounds.
    Bounds {
        /// Behavior table JSON, `p[x][y][a][b]`.
        #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
        table: Option<PathBuf>,
        #[arg(long, value_enum)]
        builtin: Option<Builtin>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Uncertainty budget for the configured plan, or for a records CSV.
    Budget {
        #[arg(long)]
        records: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("BELLBENCH_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config(format!("BELLBENCH_THREADS: expected a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(format!("BELLBENCH_THREADS: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Simulate(run) => commands::simulate(&run),
        Command::Analyze { records, run } => commands::analyze(&records, &run),
        Command::Optimize(run) => commands::optimize(&run),
        Command::Bounds { table, builtin, out_dir } => commands::bounds(table.as_deref(), builtin, out_dir.as_deref()),
        Command::Budget { records, run } => commands::budget(records.as_deref(), &run),
    });
    match result {
        Ok(()) => ExitCode::from(exit::OK),
        Err(f) => {
            eprintln!("bellbench: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
