//! `wheelodo`: simulate, decode, parse, integrate and calibrate wheel
//! odometry from files.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or malformed input,
//! 3 validation or numeric failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "wheelodo", version, about = "Wheel odometry toolkit")]
pub struct Cli {
    /// TOML file with parameter overrides; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output style for summaries printed on standard output.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a command profile into a tick log and ground truth.
    Simulate(SimulateArgs),
    /// Dead-reckon a tick log (CSV or .ticks) into a trajectory.
    Integrate(IntegrateArgs),
    /// Grid-search wheel base and radius against a manifest of experiments.
    Calibrate(CalibrateArgs),
    /// Decode left and right quadrature A/B captures into a tick log.
    Decode(DecodeArgs),
    /// Recover frames from a binary .ticks stream into a tick-log CSV.
    Parse(ParseArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct WheelArgs {
    /// Wheel base L in metres [default: 0.7].
    #[arg(long)]
    pub wheel_base: Option<f64>,
    /// Wheel radius R in metres [default: 0.1575].
    #[arg(long)]
    pub wheel_radius: Option<f64>,
    /// Encoder counts per wheel revolution [default: 4096].
    #[arg(long)]
    pub counts_per_rev: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Command profile CSV with header `v,omega,duration_s`.
    pub profile: PathBuf,
    #[arg(long, default_value_t = 100.0)]
    pub rate_hz: f64,
    #[command(flatten)]
    pub wheel: WheelArgs,
    /// Tick log output; `.ticks` writes binary frames, anything else CSV.
    #[arg(long)]
    pub out_ticks: PathBuf,
    /// Ground-truth CSV output.
    #[arg(long)]
    pub out_truth: PathBuf,
    /// Also write `<PREFIX>_left.csv` and `<PREFIX>_right.csv` A/B captures.
    #[arg(long, value_name = "PREFIX")]
    pub emit_quadrature: Option<PathBuf>,
    /// Samples per count in the A/B captures (at least 4).
    #[arg(long, default_value_t = 4)]
    pub oversample: u32,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Tick log, CSV or binary `.ticks`.
    pub log: PathBuf,
    #[command(flatten)]
    pub wheel: WheelArgs,
    /// Largest accepted per-step wheel travel in metres [default: 1.0].
    #[arg(long)]
    pub max_step: Option<f64>,
    /// Trajectory CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Express the trajectory in the UGV frame.
    #[arg(long)]
    pub to_ugv: bool,
    /// Longitudinal UGV offset in metres [default: 1.21].
    #[arg(long, requires = "to_ugv")]
    pub l0: Option<f64>,
    /// Vertical UGV offset in metres [default: 0.59].
    #[arg(long, requires = "to_ugv")]
    pub h0: Option<f64>,
    /// Report the diameter of a least-squares circle through the trajectory.
    #[arg(long)]
    pub circle: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Manifest CSV with header `kind,gt_value_m,log_path`.
    pub manifest: PathBuf,
    /// [default: 0.6]
    #[arg(long)]
    pub l_min: Option<f64>,
    /// [default: 0.8]
    #[arg(long)]
    pub l_max: Option<f64>,
    /// [default: 0.15]
    #[arg(long)]
    pub r_min: Option<f64>,
    /// [default: 0.17]
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Values per axis [default: 50].
    #[arg(long)]
    pub n: Option<usize>,
    /// Encoder counts per wheel revolution [default: 4096].
    #[arg(long)]
    pub counts_per_rev: Option<u32>,
    /// Hand-measured wheel base compared against the optimum [default: 0.7].
    #[arg(long)]
    pub measured_wheel_base: Option<f64>,
    /// Hand-measured wheel radius compared against the optimum [default: 0.1575].
    #[arg(long)]
    pub measured_wheel_radius: Option<f64>,
    /// Report CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the objective at every grid cell to this CSV.
    #[arg(long, value_name = "FILE")]
    pub dump_grid: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Search a second grid spanning one step either side of the optimum.
    #[arg(long)]
    pub refine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    /// Stop at the first illegal transition.
    Fail,
    /// Count illegal transitions and keep decoding.
    Skip,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Left wheel capture, CSV `timestamp_us,a,b`.
    #[arg(long)]
    pub left: PathBuf,
    /// Right wheel capture, CSV `timestamp_us,a,b`.
    #[arg(long)]
    pub right: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyArg::Fail)]
    pub policy: PolicyArg,
    /// Tick log output; `.ticks` writes binary frames, anything else CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Binary frame stream.
    pub input: PathBuf,
    /// Tick-log CSV output.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
