mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

/// Slope-aware terrain tools: slope maps, hypothesis-plane partition,
/// height correction, DSM evaluation and a coarse-to-fine simulator.
#[derive(Parser, Debug)]
#[command(name = "terraslope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute slope and slope-direction maps of a height grid.
    Slope(SlopeArgs),
    /// Compute the slope-direction code map of a height grid.
    Direction(DirectionArgs),
    /// Lay out per-pixel hypothesis height planes.
    Partition(PartitionArgs),
    /// Smooth a height grid with the scaled Gaussian kernel.
    Correct(CorrectArgs),
    /// Score an estimated DSM against ground truth.
    Eval(EvalArgs),
    /// Run the three-stage refinement simulator.
    Simulate(SimulateArgs),
    /// Render a grid as an 8-bit PGM image.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
pub struct SlopeArgs {
    /// Input height grid (ESRI ASCII).
    #[arg(long)]
    pub input: PathBuf,
    /// Directory receiving slope.asc and direction.asc.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Alternative path for the slope grid.
    #[arg(long)]
    pub slope_out: Option<PathBuf>,
    /// Also render slope.pgm over [LO, HI] and direction.pgm over [0, 8].
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub pgm: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct DirectionArgs {
    /// Input height grid (ESRI ASCII).
    #[arg(long)]
    pub input: PathBuf,
    /// Output grid of integer codes 0-8.
    #[arg(long)]
    pub out: PathBuf,
    /// Also render the codes as a PGM image.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// Current height estimate.
    #[arg(long)]
    pub height: PathBuf,
    /// Per-pixel standard deviation grid; zero everywhere when omitted.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    /// Minimum half-width of each pixel range in meters.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_floor: f64,
    /// Number of planes per pixel.
    #[arg(long)]
    pub planes: usize,
    /// Use equal spacing instead of slope-guided allocation.
    #[arg(long)]
    pub equal: bool,
    /// Directory receiving plane_000.asc, plane_001.asc, ...
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CorrectArgs {
    /// Input height grid.
    #[arg(long)]
    pub input: PathBuf,
    /// Corrected output grid.
    #[arg(long)]
    pub out: PathBuf,
    /// Kernel scale.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub scale: f64,
    /// Fit the scale against this target grid instead of using --scale.
    #[arg(long, conflicts_with = "scale")]
    pub fit_target: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Estimated height grid.
    #[arg(long)]
    pub est: PathBuf,
    /// Ground-truth height grid.
    #[arg(long)]
    pub gt: PathBuf,
    /// Comma-separated error thresholds in meters.
    #[arg(long, default_value = "2.5,7.5", value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Run directory.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also run all four module combinations and write ablation.csv.
    #[arg(long)]
    pub ablation: bool,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Input grid.
    #[arg(long)]
    pub input: PathBuf,
    /// Output PGM image.
    #[arg(long)]
    pub out: PathBuf,
    /// Value mapped to black; defaults to the grid minimum.
    #[arg(long, allow_negative_numbers = true)]
    pub lo: Option<f64>,
    /// Value mapped to white; defaults to the grid maximum.
    #[arg(long, allow_negative_numbers = true)]
    pub hi: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CliError::Usage(String::new()).exit_code())
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Slope(a) => commands::slope(a),
        Command::Direction(a) => commands::direction(a),
        Command::Partition(a) => commands::partition(a),
        Command::Correct(a) => commands::correct(a),
        Command::Eval(a) => commands::eval(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Render(a) => commands::render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("terraslope: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
