//! `sounder`: simulate, calibrate and analyze channel-sounder campaigns.
//!
//! Exit status: 0 on success, 1 when an input fails validation (including
//! usage errors), 2 when processing fails.

mod artifact;
mod campaign;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sounder", version, about = "Channel sounder simulation and analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for noise, RCS draws, front-end impairments and calibration
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sounder configuration JSON
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Scene JSON
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,
    /// Output file; relative paths are placed under SOUNDER_OUT_DIR when set
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format for tables
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    pub format: OutFormat,
    /// Default directory for output files
    #[arg(long, global = true, env = "SOUNDER_OUT_DIR", hide_env_values = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    Omni,
    Array,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAxis {
    Pap,
    Azimuth,
    Elevation,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a configuration (and scene, if given) against all invariants
    Validate,
    /// Build the sounding frame and print its parameters
    Waveform {
        #[arg(long, default_value_t = 1)]
        root: u64,
    },
    /// Run a campaign and write the binary recording
    Simulate {
        /// Campaign description JSON; --config and --scene override its entries
        #[arg(long)]
        campaign: Option<PathBuf>,
        /// Calibration artifact to apply instead of calibrating first
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Run the calibration procedure and write coefficients plus report
    Calibrate {
        #[arg(long)]
        campaign: Option<PathBuf>,
        #[arg(long, value_enum)]
        receiver: Option<Receiver>,
    },
    /// Threshold every capture and synthesize omni profiles
    Process {
        recording: PathBuf,
        #[arg(long, default_value_t = sounder_core::receiver::DEFAULT_MARGIN_DB)]
        margin_db: f64,
    },
    /// Fit the path-loss exponent and shadow fading along the scene's route
    FitPathloss {
        /// Recording or processed snapshots
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        g_rx: f64,
        #[arg(long, default_value_t = 1.0)]
        d0: f64,
        /// Fix the intercept at free-space loss at d0
        #[arg(long)]
        anchored: bool,
    },
    /// Power-angle or power-angle-delay grid of one snapshot
    Padp {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = GridAxis::Azimuth)]
        axis: GridAxis,
        #[arg(long, default_value_t = 0)]
        snapshot: usize,
    },
    /// Per-snapshot target power after median background subtraction
    IsolateTarget {
        input: PathBuf,
        /// Index of the target in the scene
        #[arg(long, default_value_t = 0)]
        target: usize,
        /// Half-width of the delay window, in tap spacings
        #[arg(long, default_value_t = 3.0)]
        window_taps: f64,
    },
    /// Estimate per-snapshot RCS and fit a normal distribution in dBsm
    FitRcs {
        /// Target series written by isolate-target
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        g_tx: f64,
        #[arg(long, default_value_t = 0.0)]
        g_rx: f64,
    },
    /// Maximum measurable path loss
    LinkBudget {
        #[arg(long, default_value_t = sounder_core::analysis::DEFAULT_LINK_G_RX_DBI)]
        g_rx: f64,
        #[arg(long, default_value_t = sounder_core::analysis::DEFAULT_SNR_MIN_DB)]
        snr_min: f64,
    },
    /// Convert a recording or artifact to CSV or JSON; `beams` exports the beam table
    Export { input: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
