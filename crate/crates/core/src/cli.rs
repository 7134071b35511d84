//! Command implementations for the `continuum-mhe` binary.

use std::path::{Path, PathBuf};

use crate::config::AppConfig;
use crate::ekf;
use crate::error::{Error, Result};
use crate::experiments::{self, MeasurementLog};
use crate::kinematics::Measurement;
use crate::mhe;
use crate::report::{self, NOISE_INTERPRETATION};

/// Which estimator(s) an `estimate` run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EstimatorChoice {
    Mhe,
    Ekf,
    Both,
}

impl EstimatorChoice {
    fn runs_mhe(&self) -> bool {
        matches!(self, EstimatorChoice::Mhe | EstimatorChoice::Both)
    }

    fn runs_ekf(&self) -> bool {
        matches!(self, EstimatorChoice::Ekf | EstimatorChoice::Both)
    }

    fn label(&self) -> &'static str {
        match self {
            EstimatorChoice::Mhe => "mhe",
            EstimatorChoice::Ekf => "ekf",
            EstimatorChoice::Both => "both",
        }
    }
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

/// `generate`: writes truth states plus clean and noisy measurement logs.
pub fn cmd_generate(cfg: &AppConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    ensure_out_dir(out)?;
    let dt = cfg.estimator.sample_time;
    let trajectory = experiments::generate_trajectory(
        &cfg.trajectory,
        cfg.samples,
        dt,
        cfg.estimator.robot_length,
    )?;
    let times: Vec<f64> = (0..cfg.samples).map(|k| k as f64 * dt).collect();
    let noisy = experiments::add_noise(
        &trajectory.measurements,
        cfg.noise.sigma_gamma,
        cfg.noise.sigma_beta,
        cfg.noise.seed.unwrap_or(cfg.seed),
    )?;

    report::write_states_csv(&out.join("truth.csv"), &times, &trajectory.states)?;
    experiments::write_measurement_log(
        &out.join("measurements_clean.csv"),
        &times,
        &trajectory.measurements,
    )?;
    experiments::write_measurement_log(&out.join("measurements_noisy.csv"), &times, &noisy)?;
    report::write_json(
        &out.join("generate.json"),
        &report::GenerateDocument {
            config: cfg.clone(),
            seed: cfg.seed,
            noise_interpretation: NOISE_INTERPRETATION.into(),
            samples: cfg.samples,
            truth_file: "truth.csv".into(),
            clean_file: "measurements_clean.csv".into(),
            noisy_file: "measurements_noisy.csv".into(),
        },
    )?;
    println!("wrote {} samples to {}", cfg.samples, out.display());
    Ok(())
}

/// `estimate`: replays a measurement log through the selected estimator(s).
///
/// The reference trajectory is the one implied by the measurements themselves
/// (clamped inversion plus forward kinematics), which is exact for clean
/// synthetic logs. The sample time is inferred from the log timestamps when
/// possible.
pub fn cmd_estimate(
    cfg: &AppConfig,
    out: &Path,
    log_path: &Path,
    choice: EstimatorChoice,
    degrees: bool,
) -> Result<()> {
    cfg.validate()?;
    ensure_out_dir(out)?;
    let log = load_log(log_path, degrees)?;
    let samples = log.measurements.len();

    let mut est_cfg = cfg.estimator.clone();
    if let Some(dt) = log.inferred_dt() {
        est_cfg.sample_time = dt;
    }
    let s = est_cfg.robot_length;
    let reference = experiments::measurement_implied_states(&log.measurements, s)?;

    let mhe_result = if choice.runs_mhe() {
        if samples <= est_cfg.horizon {
            return Err(Error::invalid(format!(
                "log has {samples} samples; the horizon estimator needs more than N = {}",
                est_cfg.horizon
            )));
        }
        Some(mhe::run_sliding(&log.measurements, &est_cfg)?)
    } else {
        None
    };
    let ekf_result =
        if choice.runs_ekf() { Some(ekf::run_filter(&log.measurements, &est_cfg)?) } else { None };

    // Score both estimators on the horizon support when it exists, otherwise
    // (filter-only short logs) on every sample.
    let support = if samples > est_cfg.horizon {
        est_cfg.horizon - 1..samples - 1
    } else {
        0..samples
    };
    let srmse_mhe = mhe_result
        .as_ref()
        .map(|r| experiments::srmse(&reference[support.clone()], &r.estimates, est_cfg.srmse_components))
        .transpose()?;
    let srmse_ekf = ekf_result
        .as_ref()
        .map(|e| {
            experiments::srmse(
                &reference[support.clone()],
                &e[support.clone()],
                est_cfg.srmse_components,
            )
        })
        .transpose()?;

    let series = report::build_series(
        &log.times,
        &log.measurements,
        &reference,
        mhe_result.as_ref().map(|r| (r.estimates.as_slice(), r.first_sample)),
        ekf_result.as_deref(),
    );
    let timing = report::EstimateTiming {
        mhe_mean_solve_seconds: mhe_result.as_ref().map(|r| {
            r.solve_seconds.iter().sum::<f64>() / r.solve_seconds.len().max(1) as f64
        }),
        mhe_total_seconds: mhe_result.as_ref().map(|r| r.solve_seconds.iter().sum()),
    };
    let document = report::EstimateDocument {
        config: cfg.clone(),
        seed: cfg.seed,
        estimator: choice.label().into(),
        noise_interpretation: NOISE_INTERPRETATION.into(),
        metrics: report::EstimateMetrics {
            srmse_mhe,
            srmse_ekf,
            evaluated_samples: Some([support.start, support.end - 1]),
        },
        timing,
        series,
    };
    report::write_json(&out.join("estimate.json"), &document)?;
    report::write_series_csv(&out.join("series.csv"), &document.series)?;
    if let Some(v) = srmse_mhe {
        println!("srmse_mhe = {v}");
    }
    if let Some(v) = srmse_ekf {
        println!("srmse_ekf = {v}");
    }
    Ok(())
}

/// `montecarlo`: the noise-robustness table.
pub fn cmd_montecarlo(cfg: &AppConfig, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let rows = experiments::run_monte_carlo(cfg)?;
    report::write_json(
        &out.join("montecarlo.json"),
        &report::MonteCarloDocument {
            config: cfg.clone(),
            seed: cfg.seed,
            noise_interpretation: NOISE_INTERPRETATION.into(),
            rows: rows.clone(),
        },
    )?;
    report::write_montecarlo_csv(&out.join("montecarlo.csv"), &rows)?;
    for row in &rows {
        match (&row.error, row.srmse_mhe, row.srmse_ekf) {
            (None, Some(m), Some(e)) => {
                println!("scenario {}: srmse_mhe={m:.6} srmse_ekf={e:.6}", row.index + 1)
            }
            (Some(message), _, _) => println!("scenario {}: failed: {message}", row.index + 1),
            _ => {}
        }
    }
    Ok(())
}

/// `horizon-sweep`: accuracy and timing as the window length varies.
pub fn cmd_horizon_sweep(cfg: &AppConfig, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let rows = experiments::run_horizon_sweep(cfg)?;
    report::write_json(
        &out.join("horizon_sweep.json"),
        &report::SweepDocument { config: cfg.clone(), seed: cfg.seed, rows: rows.clone() },
    )?;
    report::write_sweep_csv(&out.join("horizon_sweep.csv"), &rows)?;
    for row in &rows {
        println!(
            "N={}: solves={} srmse={:.6} mean_solve={:.4}s",
            row.horizon, row.solve_count, row.srmse, row.mean_solve_seconds
        );
    }
    Ok(())
}

fn load_log(path: &Path, degrees: bool) -> Result<MeasurementLog> {
    let mut log = experiments::load_measurement_log(path)?;
    if degrees {
        let to_rad = std::f64::consts::PI / 180.0;
        log.measurements = log
            .measurements
            .iter()
            .map(|z| Measurement::new(z.gamma * to_rad, z.beta * to_rad))
            .collect();
    }
    Ok(log)
}

/// Loads the config file if given, else the built-in defaults; applies the
/// `--seed` override.
pub fn load_config(path: Option<&PathBuf>, seed: Option<u64>) -> Result<AppConfig> {
    let mut cfg = match path {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}
