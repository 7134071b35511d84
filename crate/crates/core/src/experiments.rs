//! Synthetic-data generation, noise injection, metrics, and the experiment
//! protocols (noise-robustness Monte Carlo, horizon sweep, log replay).

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AppConfig, EstimatorConfig, SrmseComponents};
use crate::ekf;
use crate::error::{Error, Result};
use crate::kinematics::{
    invert_measurement, measurement_map, Measurement, RobotState, ShapeParams,
};
use crate::mhe;
use crate::motion::wrap_angle;

/// One sinusoidal angle profile: `center + amplitude * sin(2 pi f t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidSpec {
    pub center: f64,
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub phase: f64,
}

impl SinusoidSpec {
    pub fn value(&self, t: f64) -> f64 {
        self.center
            + self.amplitude * (2.0 * std::f64::consts::PI * self.frequency_hz * t + self.phase).sin()
    }
}

/// Synthetic trajectory families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrajectoryKind {
    /// Feasible protocol: smooth roll/pitch profiles within the sampling
    /// ranges `gamma in [0, pi/4]`, `beta in [0, pi/2]`; shape angles follow
    /// by measurement inversion.
    RollPitchSinusoid { gamma: SinusoidSpec, beta: SinusoidSpec },
    /// Constraint-violation protocol: planar motion with the curvature angle
    /// ramping linearly through the `pi/2` workspace limit.
    PlanarThetaRamp { theta_start: f64, theta_rate: f64, phi: f64 },
}

impl Default for TrajectoryKind {
    fn default() -> Self {
        TrajectoryKind::RollPitchSinusoid {
            gamma: SinusoidSpec { center: 0.35, amplitude: 0.30, frequency_hz: 0.15, phase: 0.0 },
            beta: SinusoidSpec {
                center: 0.70,
                amplitude: 0.50,
                frequency_hz: 0.10,
                phase: std::f64::consts::FRAC_PI_2,
            },
        }
    }
}

impl TrajectoryKind {
    /// Violating profile that crosses `theta = pi/2` at six seconds, like the
    /// constraint-handling study.
    pub fn default_violating() -> Self {
        TrajectoryKind::PlanarThetaRamp {
            theta_start: 0.3,
            theta_rate: (std::f64::consts::FRAC_PI_2 - 0.3) / 6.0,
            phi: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |value: f64, name: &str| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("trajectory field {name} must be finite")))
            }
        };
        match self {
            TrajectoryKind::RollPitchSinusoid { gamma, beta } => {
                for (spec, name) in [(gamma, "gamma"), (beta, "beta")] {
                    finite(spec.center, name)?;
                    finite(spec.amplitude, name)?;
                    finite(spec.frequency_hz, name)?;
                    finite(spec.phase, name)?;
                }
                Ok(())
            }
            TrajectoryKind::PlanarThetaRamp { theta_start, theta_rate, phi } => {
                finite(*theta_start, "theta_start")?;
                finite(*theta_rate, "theta_rate")?;
                finite(*phi, "phi")
            }
        }
    }
}

/// Per-scenario noise: `|sigma|` is the Gaussian standard deviation, radians.
/// Signed values are accepted (the sign is discarded when sampling). An
/// explicit seed overrides the one derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevels {
    pub sigma_gamma: f64,
    pub sigma_beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl NoiseLevels {
    pub fn new(sigma_gamma: f64, sigma_beta: f64) -> Self {
        NoiseLevels { sigma_gamma, sigma_beta, seed: None }
    }
}

/// Stock Monte-Carlo scenarios: ten (sigma_beta, sigma_gamma) pairs as
/// published; the sign is ignored when sampling.
pub const DEFAULT_NOISE_LEVELS: [NoiseLevels; 10] = [
    NoiseLevels { sigma_beta: 0.022, sigma_gamma: -0.024, seed: None },
    NoiseLevels { sigma_beta: 0.028, sigma_gamma: 0.033, seed: None },
    NoiseLevels { sigma_beta: -0.026, sigma_gamma: 0.032, seed: None },
    NoiseLevels { sigma_beta: 0.029, sigma_gamma: -0.001, seed: None },
    NoiseLevels { sigma_beta: 0.010, sigma_gamma: 0.021, seed: None },
    NoiseLevels { sigma_beta: -0.028, sigma_gamma: -0.025, seed: None },
    NoiseLevels { sigma_beta: -0.015, sigma_gamma: -0.005, seed: None },
    NoiseLevels { sigma_beta: 0.003, sigma_gamma: 0.029, seed: None },
    NoiseLevels { sigma_beta: 0.032, sigma_gamma: 0.020, seed: None },
    NoiseLevels { sigma_beta: 0.033, sigma_gamma: 0.032, seed: None },
];

/// Ground truth plus clean sensor stream for one synthetic run.
#[derive(Debug, Clone)]
pub struct SyntheticTrajectory {
    pub states: Vec<RobotState>,
    pub measurements: Vec<Measurement>,
    pub inputs: Vec<crate::motion::VelocityInput>,
}

/// Samples a trajectory at `dt` over `samples` instants.
///
/// Feasible profiles are validated against the sampling ranges; the planar
/// ramp is allowed (meant, even) to cross the workspace limit, and its
/// measurements stay continuous through `theta = pi/2`.
pub fn generate_trajectory(
    kind: &TrajectoryKind,
    samples: usize,
    dt: f64,
    s: f64,
) -> Result<SyntheticTrajectory> {
    kind.validate()?;
    if samples == 0 {
        return Err(Error::invalid("trajectory needs at least one sample"));
    }
    if !(dt > 0.0) || !(s > 0.0) {
        return Err(Error::invalid("dt and robot length must be positive"));
    }
    let mut shapes = Vec::with_capacity(samples);
    match kind {
        TrajectoryKind::RollPitchSinusoid { gamma, beta } => {
            use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
            let tol = 1e-9;
            for k in 0..samples {
                let t = k as f64 * dt;
                let g = gamma.value(t);
                let b = beta.value(t);
                if !(-tol..=FRAC_PI_4 + tol).contains(&g) {
                    return Err(Error::invalid(format!(
                        "roll profile leaves [0, pi/4] at t={t}: gamma={g}"
                    )));
                }
                if !(-tol..=FRAC_PI_2 + tol).contains(&b) {
                    return Err(Error::invalid(format!(
                        "pitch profile leaves [0, pi/2] at t={t}: beta={b}"
                    )));
                }
                let (theta, phi) = invert_measurement(Measurement::new(g, b).clamped_principal())?;
                shapes.push(ShapeParams::new(theta, phi, s));
            }
        }
        TrajectoryKind::PlanarThetaRamp { theta_start, theta_rate, phi } => {
            for k in 0..samples {
                let t = k as f64 * dt;
                let theta = theta_start + theta_rate * t;
                if theta.abs() >= std::f64::consts::PI {
                    return Err(Error::invalid(format!(
                        "planar ramp reaches |theta| >= pi at t={t}"
                    )));
                }
                shapes.push(ShapeParams::new(theta, *phi, s));
            }
        }
    }
    let states: Vec<RobotState> =
        shapes.iter().map(|&q| RobotState::from_shape(q)).collect::<Result<_>>()?;
    let measurements: Vec<Measurement> =
        shapes.iter().map(|&q| measurement_map(q)).collect::<Result<_>>()?;
    let inputs = shapes
        .windows(2)
        .map(|w| {
            crate::motion::VelocityInput::new(
                (w[1].theta - w[0].theta) / dt,
                wrap_angle(w[1].phi - w[0].phi) / dt,
            )
        })
        .collect();
    Ok(SyntheticTrajectory { states, measurements, inputs })
}

/// Adds zero-mean Gaussian noise (std dev `|sigma|`) to both angles, drawing
/// gamma then beta for each sample from a ChaCha8 stream seeded with `seed`.
pub fn add_noise(
    measurements: &[Measurement],
    sigma_gamma: f64,
    sigma_beta: f64,
    seed: u64,
) -> Result<Vec<Measurement>> {
    if !sigma_gamma.is_finite() || !sigma_beta.is_finite() {
        return Err(Error::invalid("noise levels must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma_dist = Normal::new(0.0, sigma_gamma.abs())
        .map_err(|e| Error::invalid(format!("bad roll noise: {e}")))?;
    let beta_dist = Normal::new(0.0, sigma_beta.abs())
        .map_err(|e| Error::invalid(format!("bad pitch noise: {e}")))?;
    Ok(measurements
        .iter()
        .map(|z| {
            Measurement::new(z.gamma + gamma_dist.sample(&mut rng), z.beta + beta_dist.sample(&mut rng))
        })
        .collect())
}

/// Sum over state components of the per-component RMS error between two
/// aligned state series.
pub fn srmse(
    truth: &[RobotState],
    estimates: &[RobotState],
    components: SrmseComponents,
) -> Result<f64> {
    if truth.len() != estimates.len() {
        return Err(Error::invalid(format!(
            "srmse needs aligned series, got {} truth and {} estimate samples",
            truth.len(),
            estimates.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("srmse needs at least one sample"));
    }
    let count = match components {
        SrmseComponents::FullState => 5,
        SrmseComponents::PositionOnly => 3,
    };
    let n = truth.len() as f64;
    let mut total = 0.0;
    for c in 0..count {
        let mean_sq = truth
            .iter()
            .zip(estimates)
            .map(|(a, b)| (a.to_vector()[c] - b.to_vector()[c]).powi(2))
            .sum::<f64>()
            / n;
        total += mean_sq.sqrt();
    }
    Ok(total)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-scenario seed derived from the master seed and the
/// scenario index, so results do not depend on execution order.
pub fn scenario_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// One Monte-Carlo scenario outcome. A failed scenario keeps its row with an
/// error message instead of aborting the batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub index: usize,
    pub sigma_beta: f64,
    pub sigma_gamma: f64,
    pub seed: u64,
    pub srmse_mhe: Option<f64>,
    pub srmse_ekf: Option<f64>,
    pub mean_solve_seconds: Option<f64>,
    pub error: Option<String>,
}

/// Indices of the shared evaluation support: samples where the horizon
/// estimator has estimates (`N-1 ..= M-2`); the filter is scored there too.
fn evaluation_range(samples: usize, horizon: usize) -> std::ops::Range<usize> {
    horizon - 1..samples - 1
}

/// Full result of running both estimators on one noisy stream: aligned state
/// series, per-estimator SRMSE on the shared support, and per-solve timing.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub truth: Vec<RobotState>,
    pub mhe_estimates: Vec<RobotState>,
    pub ekf_estimates: Vec<RobotState>,
    /// Sample index of the first horizon estimate (`N - 1`).
    pub first_sample: usize,
    pub srmse_mhe: f64,
    pub srmse_ekf: f64,
    pub solve_seconds: Vec<f64>,
}

/// Runs both estimators on the same noisy measurements and scores them
/// against the clean truth on the shared evaluation support.
pub fn run_scenario(
    clean: &SyntheticTrajectory,
    noisy: &[Measurement],
    cfg: &EstimatorConfig,
) -> Result<ScenarioResult> {
    if noisy.len() != clean.states.len() {
        return Err(Error::invalid("noisy stream must match the clean trajectory length"));
    }
    let sliding = mhe::run_sliding(noisy, cfg)?;
    let filtered = ekf::run_filter(noisy, cfg)?;
    let support = evaluation_range(clean.states.len(), cfg.horizon);
    let truth = &clean.states[support.clone()];
    let srmse_mhe = srmse(truth, &sliding.estimates, cfg.srmse_components)?;
    let srmse_ekf = srmse(truth, &filtered[support], cfg.srmse_components)?;
    Ok(ScenarioResult {
        truth: clean.states.clone(),
        mhe_estimates: sliding.estimates,
        ekf_estimates: filtered,
        first_sample: sliding.first_sample,
        srmse_mhe,
        srmse_ekf,
        solve_seconds: sliding.solve_seconds,
    })
}

fn run_one_scenario(
    clean: &SyntheticTrajectory,
    cfg: &EstimatorConfig,
    noise: &NoiseLevels,
    index: usize,
    seed: u64,
) -> ScenarioRow {
    let mut row = ScenarioRow {
        index,
        sigma_beta: noise.sigma_beta,
        sigma_gamma: noise.sigma_gamma,
        seed,
        srmse_mhe: None,
        srmse_ekf: None,
        mean_solve_seconds: None,
        error: None,
    };
    let outcome = (|| -> Result<ScenarioResult> {
        let noisy = add_noise(&clean.measurements, noise.sigma_gamma, noise.sigma_beta, seed)?;
        run_scenario(clean, &noisy, cfg)
    })();
    match outcome {
        Ok(result) => {
            row.srmse_mhe = Some(result.srmse_mhe);
            row.srmse_ekf = Some(result.srmse_ekf);
            row.mean_solve_seconds = Some(
                result.solve_seconds.iter().sum::<f64>() / result.solve_seconds.len() as f64,
            );
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every configured noise scenario on identical clean data, scoring the
/// horizon estimator and the filter on the same noisy streams and the same
/// evaluation support. Scenarios run in parallel; each owns a PRNG seeded
/// from `(master seed, index)` so the table is reproducible.
pub fn run_monte_carlo(cfg: &AppConfig) -> Result<Vec<ScenarioRow>> {
    cfg.validate()?;
    let scenarios = &cfg.monte_carlo.noise_levels;
    if scenarios.is_empty() {
        return Err(Error::invalid("monte carlo needs at least one noise scenario"));
    }
    if cfg.samples <= cfg.estimator.horizon {
        return Err(Error::invalid("samples must exceed the horizon"));
    }
    let clean = generate_trajectory(
        &cfg.trajectory,
        cfg.samples,
        cfg.estimator.sample_time,
        cfg.estimator.robot_length,
    )?;
    Ok(scenarios
        .par_iter()
        .enumerate()
        .map(|(index, noise)| {
            let seed = noise.seed.unwrap_or_else(|| scenario_seed(cfg.seed, index as u64));
            run_one_scenario(&clean, &cfg.estimator, noise, index, seed)
        })
        .collect())
}

/// One horizon-sweep row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub horizon: usize,
    pub solve_count: usize,
    pub srmse: f64,
    pub mean_solve_seconds: f64,
    pub total_seconds: f64,
}

/// Sweeps the window length over noiseless data, recording accuracy and
/// timing per horizon. Every horizon must be shorter than the sample count.
pub fn run_horizon_sweep(cfg: &AppConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let horizons = &cfg.horizon_sweep.horizons;
    if horizons.is_empty() {
        return Err(Error::invalid("horizon sweep needs at least one horizon"));
    }
    for &n in horizons {
        if n < 1 || n >= cfg.samples {
            return Err(Error::invalid(format!(
                "horizon {n} must be in [1, samples) = [1, {})",
                cfg.samples
            )));
        }
    }
    let clean = generate_trajectory(
        &cfg.trajectory,
        cfg.samples,
        cfg.estimator.sample_time,
        cfg.estimator.robot_length,
    )?;
    let mut rows = Vec::with_capacity(horizons.len());
    for &horizon in horizons {
        let est_cfg = EstimatorConfig { horizon, ..cfg.estimator.clone() };
        let sliding = mhe::run_sliding(&clean.measurements, &est_cfg)?;
        let support = evaluation_range(cfg.samples, horizon);
        let err = srmse(&clean.states[support], &sliding.estimates, est_cfg.srmse_components)?;
        let total: f64 = sliding.solve_seconds.iter().sum();
        rows.push(SweepRow {
            horizon,
            solve_count: sliding.estimates.len(),
            srmse: err,
            mean_solve_seconds: total / sliding.solve_seconds.len() as f64,
            total_seconds: total,
        });
    }
    Ok(rows)
}

/// Reference states implied by a measurement stream alone: clamped inversion
/// plus forward kinematics per sample. Used when replaying logs that carry no
/// ground truth.
pub fn measurement_implied_states(
    measurements: &[Measurement],
    s: f64,
) -> Result<Vec<RobotState>> {
    measurements
        .iter()
        .map(|z| {
            let (theta, phi) = invert_measurement(z.clamped_principal())?;
            RobotState::from_shape(ShapeParams::new(theta, phi, s))
        })
        .collect()
}

/// A parsed measurement log: strictly increasing timestamps plus roll/pitch
/// samples, radians.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLog {
    pub times: Vec<f64>,
    pub measurements: Vec<Measurement>,
}

impl MeasurementLog {
    /// Median inter-sample gap; `None` for single-sample logs.
    pub fn inferred_dt(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let mut gaps: Vec<f64> =
            self.times.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite gaps"));
        Some(gaps[gaps.len() / 2])
    }
}

const LOG_HEADER: &str = "t,gamma,beta";

/// Reads a `t,gamma,beta` CSV log (radians, LF line endings).
pub fn load_measurement_log(path: &Path) -> Result<MeasurementLog> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::Parse { line: 1, message: "empty file".into() }),
    };
    if header.trim() != LOG_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header '{LOG_HEADER}', got '{}'", header.trim()),
        });
    }
    let mut times = Vec::new();
    let mut measurements = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 comma-separated fields, got {}", fields.len()),
            });
        }
        let mut values = [0.0; 3];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad number '{field}': {e}"),
            })?;
        }
        if let Some(&last) = times.last() {
            if values[0] <= last {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-increasing timestamp {} after {last}", values[0]),
                });
            }
        }
        times.push(values[0]);
        measurements.push(Measurement::new(values[1], values[2]));
    }
    if measurements.is_empty() {
        return Err(Error::Parse { line: 1, message: "log contains no samples".into() });
    }
    Ok(MeasurementLog { times, measurements })
}

/// Writes a measurement log in the exact format `load_measurement_log` reads.
/// Floats use the shortest round-trip decimal form.
pub fn write_measurement_log(
    path: &Path,
    times: &[f64],
    measurements: &[Measurement],
) -> Result<()> {
    if times.len() != measurements.len() {
        return Err(Error::invalid("times and measurements must have equal length"));
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{LOG_HEADER}")?;
    for (t, z) in times.iter().zip(measurements) {
        writeln!(out, "{},{},{}", t, z.gamma, z.beta)?;
    }
    Ok(())
}
