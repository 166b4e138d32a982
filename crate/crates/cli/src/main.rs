//! `eofvel`: simulate, estimate, evaluate and plot planar vehicle velocity
//! from a downward-facing event camera.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser)]
#[command(name = "eofvel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum EventFormat {
    Bin,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scenario into events, ground truth, IMU samples and a run config.
    Simulate {
        /// Built-in scenario: constant, platform, disk or highway.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        scenario: Option<String>,
        /// Scenario file (`section.key = value`).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "bin")]
        format: EventFormat,
        /// Shorten the simulated duration, seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run the estimator over an event file.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `paths.events`.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Overrides `paths.imu`.
        #[arg(long)]
        imu: Option<PathBuf>,
        /// Overrides `paths.output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare an estimate CSV with ground truth.
    Evaluate {
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        /// Pairing tolerance, seconds. Defaults to half the window from --config.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Latency CSV written by `estimate`, folded into the report.
        #[arg(long)]
        latency: Option<PathBuf>,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time-series and residual SVGs for each channel.
    Plot {
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Longest exposure per speed for given blur budgets.
    BlurBudget {
        /// Speeds in m/s, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = default_speeds())]
        speeds: Vec<f64>,
        /// Blur budgets as fractions of the image width, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.02, 0.05])]
        budgets: Vec<f64>,
        /// Camera height above ground, m.
        #[arg(long, default_value_t = 0.6)]
        z: f64,
        /// Horizontal field of view, degrees.
        #[arg(long, default_value_t = 60.0)]
        fov_deg: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the dense flow between one pair of frames.
    FlowDebug {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        events: Option<PathBuf>,
        /// Index of the first frame of the pair.
        #[arg(long, default_value_t = 0)]
        frame: usize,
        /// Arrow spacing in the quiver plot, px.
        #[arg(long, default_value_t = 8)]
        stride: usize,
        /// Arrow length multiplier.
        #[arg(long, default_value_t = 1.0)]
        gain: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn default_speeds() -> Vec<f64> {
    (1..=50).map(f64::from).collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            scenario,
            config,
            out,
            format,
            duration,
        } => commands::simulate(scenario.as_deref(), config.as_deref(), &out, format, duration),
        Command::Estimate {
            config,
            events,
            imu,
            out,
        } => commands::estimate(&config, events, imu, out),
        Command::Evaluate {
            estimates,
            ground_truth,
            tolerance,
            config,
            latency,
            report,
        } => commands::evaluate(
            &estimates,
            &ground_truth,
            tolerance,
            config.as_deref(),
            latency.as_deref(),
            report.as_deref(),
        ),
        Command::Plot {
            estimates,
            ground_truth,
            tolerance,
            config,
            out,
        } => commands::plot(&estimates, &ground_truth, tolerance, config.as_deref(), &out),
        Command::BlurBudget {
            speeds,
            budgets,
            z,
            fov_deg,
            out,
        } => commands::blur_budget(&speeds, &budgets, z, fov_deg, out.as_deref()),
        Command::FlowDebug {
            config,
            events,
            frame,
            stride,
            gain,
            out,
        } => commands::flow_debug(&config, events, frame, stride, gain, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eofvel: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
