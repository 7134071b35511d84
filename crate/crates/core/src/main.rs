use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use continuum_mhe::cli::{self, EstimatorChoice};

/// Constrained moving-horizon state estimation for one-section
/// constant-curvature continuum robots, with an EKF baseline and a synthetic
/// experiment harness.
#[derive(Parser)]
#[command(name = "continuum-mhe", version, about)]
struct Args {
    /// JSON configuration file; omitted fields fall back to built-in
    /// defaults. Angles in config files are radians.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for result files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trajectory: truth states plus clean and noisy
    /// measurement logs.
    Generate,
    /// Replay a measurement log through the selected estimator(s).
    Estimate {
        /// Measurement log (`t,gamma,beta` CSV).
        log: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        estimator: EstimatorChoice,
        /// Treat the log angles as degrees (converted on input).
        #[arg(long)]
        degrees: bool,
    },
    /// Run the noise-robustness scenario table for both estimators.
    Montecarlo,
    /// Sweep the horizon length on noiseless data, recording accuracy and
    /// timing.
    HorizonSweep,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = cli::load_config(args.config.as_ref(), args.seed).and_then(|cfg| {
        match &args.command {
            Command::Generate => cli::cmd_generate(&cfg, &args.out),
            Command::Estimate { log, estimator, degrees } => {
                cli::cmd_estimate(&cfg, &args.out, log, *estimator, *degrees)
            }
            Command::Montecarlo => cli::cmd_montecarlo(&cfg, &args.out),
            Command::HorizonSweep => cli::cmd_horizon_sweep(&cfg, &args.out),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
