//! Command-line front end: `run`, `compare` and `phantom`.

pub mod compare;
pub mod phantom;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use compare::{compare_reports, DeltaReport, MetricDelta};
pub use run::{run, RunConfig, RunSummary};

use crate::plaque::PlaqueError;

/// Exit status for a successful run, with or without plaque.
pub const EXIT_OK: i32 = 0;
/// Failure to write outputs.
pub const EXIT_OUTPUT: i32 = 1;
/// Unreadable or invalid input.
pub const EXIT_INPUT: i32 = 2;
/// A pipeline stage failed.
pub const EXIT_STAGE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("{0}")]
    Stage(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Stage(_) => EXIT_STAGE,
            CliError::Output(_) => EXIT_OUTPUT,
        }
    }

    pub(crate) fn stage(stage: &str, message: impl std::fmt::Display) -> Self {
        CliError::Stage(format!("stage `{stage}` failed: {message}"))
    }

    pub(crate) fn from_pipeline(error: PlaqueError) -> Self {
        match (&error, error.stage()) {
            (_, Some(_)) => CliError::Stage(error.to_string()),
            (PlaqueError::InvalidInput(_), None) => CliError::Input(error.to_string()),
            _ => CliError::stage("pipeline", error),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "plaquemesh", version, about = "Plaque mesh extraction and morphometry from labeled vessel-wall volumes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the plaque mesh, unfolded map and report from label volumes.
    Run(RunArgs),
    /// Compare a baseline and a follow-up report.
    Compare(CompareArgs),
    /// Write a synthetic tube phantom with its ground truth.
    Phantom(phantom::PhantomArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdChoice {
    Global,
    Case,
    Both,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Label volume(s) in NRRD format (0 background, 1 lumen, 2 wall). One artery per file.
    #[arg(long, required = true, num_args = 1..)]
    pub labels: Vec<PathBuf>,
    /// Intensity volume(s) on the same grid, one per label volume.
    #[arg(long, num_args = 1..)]
    pub intensity: Vec<PathBuf>,
    /// Output directory. With several label volumes each gets a subdirectory named after its file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "case")]
    pub threshold_mode: ThresholdChoice,
    /// Multiplier of the standard deviation in the case-specific threshold.
    #[arg(long, default_value_t = 3.0)]
    pub k: f64,
    #[arg(long, default_value_t = 10)]
    pub smooth_iters: usize,
    #[arg(long, default_value_t = 0.2)]
    pub smooth_relax: f64,
    /// Smallest plaque region kept on the outer wall (mm²).
    #[arg(long, default_value_t = 10.0)]
    pub min_area: f64,
    /// Histogram bin width; defaults to 1/64 of the inside intensity range.
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Color range of the unfolded map in mm; defaults to 0 up to the region maximum.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
    pub vwt_range: Option<Vec<f64>>,
    /// Also write every intermediate mesh under `stages/`.
    #[arg(long)]
    pub debug_stages: bool,
    /// Write ASCII instead of binary PLY.
    #[arg(long)]
    pub ascii_ply: bool,
    /// Number of arteries processed concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub baseline: PathBuf,
    pub followup: PathBuf,
    /// Write the delta report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run::run_command(&args),
        Command::Compare(args) => compare::compare_command(&args),
        Command::Phantom(args) => phantom::phantom_command(&args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}
