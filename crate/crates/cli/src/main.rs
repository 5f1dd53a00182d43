mod commands;
mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use feedflow_core::formulations::{Control, ExpansionPolicy};
use feedflow_core::scenario::MillingMode;

#[derive(Parser)]
#[command(name = "feedflow", version, about = "Optimal feeding control of a biomass pre-processing line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and its equipment graph.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Solve one model over a fixed horizon.
    Solve(RunArgs),
    /// Find the shortest horizon that processes every bale.
    Mintime(RunArgs),
    /// Run two configurations and compare their KPIs.
    Compare(CompareArgs),
}

fn parse_control(s: &str) -> Result<Control, String> {
    Control::parse(s).ok_or_else(|| format!("`{s}` is not bffpc or hpc"))
}

fn parse_milling(s: &str) -> Result<MillingMode, String> {
    MillingMode::parse(s).ok_or_else(|| format!("`{s}` is not with or without"))
}

fn parse_policy(s: &str) -> Result<ExpansionPolicy, String> {
    ExpansionPolicy::parse(s).ok_or_else(|| format!("`{s}` is not fixed or optimized"))
}

#[derive(Args, Clone)]
pub struct RunArgs {
    /// Scenario TOML file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Control strategy: bffpc or hpc.
    #[arg(long, default_value = "hpc", value_parser = parse_control)]
    pub control: Control,
    /// Fractional milling: with or without. Defaults to the scenario's mode.
    #[arg(long, value_parser = parse_milling)]
    pub milling: Option<MillingMode>,
    /// Feeding pattern such as `6L,10M,4H*10` or `random:seed=7`.
    /// Defaults to the scenario's pattern.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Seed of a random pattern; implies `random` when no pattern is given.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Period length in minutes (1, 5 or 10). Defaults to the scenario's.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Total horizon in hours for `solve`; budgets keep their proportions.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Storage expansion: fixed or optimized.
    #[arg(long, default_value = "optimized", value_parser = parse_policy)]
    pub expansion: ExpansionPolicy,
    /// Bisect instead of stepping one period at a time.
    #[arg(long)]
    pub bisect: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write the LP models as MPS files.
    #[arg(long)]
    pub export_mps: bool,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub a: RunArgs,
    /// Scenario of run B. Defaults to run A's.
    #[arg(long)]
    pub scenario_b: Option<PathBuf>,
    #[arg(long, value_parser = parse_control)]
    pub control_b: Option<Control>,
    #[arg(long, value_parser = parse_milling)]
    pub milling_b: Option<MillingMode>,
    #[arg(long)]
    pub pattern_b: Option<String>,
    #[arg(long)]
    pub seed_b: Option<u64>,
    #[arg(long, value_parser = parse_policy)]
    pub expansion_b: Option<ExpansionPolicy>,
    /// Compare minimum-time runs instead of fixed-horizon solves.
    #[arg(long)]
    pub mintime: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] feedflow_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => e.exit_code() as u8,
            CliError::Io { .. } => 2,
            CliError::Config(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { scenario } => commands::validate(&scenario),
        Command::Solve(args) => commands::solve(&args),
        Command::Mintime(args) => commands::mintime(&args),
        Command::Compare(args) => commands::compare(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
