//! Run configuration: estimator parameters, trajectory/noise scenarios, and
//! the experiment lists consumed by the CLI.
//!
//! Config files are JSON documents deserializing into [`AppConfig`]. Every
//! field has a built-in default, so a file only needs the entries it wants to
//! override; command-line flags are applied on top of the file. All angles in
//! config files are radians.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{NoiseLevels, TrajectoryKind, DEFAULT_NOISE_LEVELS};
use crate::solver::SolverSettings;

/// Per-component workspace box for the state `[x, y, z, theta, phi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBounds {
    pub lower: [f64; 5],
    pub upper: [f64; 5],
}

impl StateBounds {
    /// Workspace box implied by the robot's arc length: positions within
    /// `[-s, s]`, `theta in [0, pi/2]`, `phi in [-pi, pi]`.
    pub fn from_robot_length(s: f64) -> Self {
        use std::f64::consts::{FRAC_PI_2, PI};
        StateBounds {
            lower: [-s, -s, -s, 0.0, -PI],
            upper: [s, s, s, FRAC_PI_2, PI],
        }
    }

    pub fn lower_vector(&self) -> SVector<f64, 5> {
        SVector::from(self.lower)
    }

    pub fn upper_vector(&self) -> SVector<f64, 5> {
        SVector::from(self.upper)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..5 {
            if !self.lower[i].is_finite() || !self.upper[i].is_finite() {
                return Err(Error::invalid("state bounds must be finite"));
            }
            if self.lower[i] > self.upper[i] {
                return Err(Error::invalid(format!(
                    "lower bound {} exceeds upper bound {} in component {i}",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        Ok(())
    }

    /// Componentwise clamp of a packed state vector.
    pub fn clamp(&self, x: &SVector<f64, 5>) -> SVector<f64, 5> {
        SVector::from_fn(|i, _| x[i].clamp(self.lower[i], self.upper[i]))
    }
}

/// EKF tuning: process/measurement noise diagonals and initial covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EkfSettings {
    /// Process-noise covariance diagonal for `[x, y, z, theta, phi]`.
    pub q_diag: [f64; 5],
    /// Measurement-noise covariance diagonal for `[gamma, beta]`, rad^2.
    pub r_diag: [f64; 2],
    /// Initial covariance `p0 * I`.
    pub initial_covariance: f64,
}

impl Default for EkfSettings {
    fn default() -> Self {
        EkfSettings {
            q_diag: [1e-4; 5],
            r_diag: [1e-3; 2],
            initial_covariance: 1e-2,
        }
    }
}

impl EkfSettings {
    pub fn validate(&self) -> Result<()> {
        if self.q_diag.iter().any(|q| !(*q >= 0.0)) {
            return Err(Error::invalid("EKF q_diag entries must be non-negative"));
        }
        if self.r_diag.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::invalid("EKF r_diag entries must be positive"));
        }
        if !(self.initial_covariance > 0.0) {
            return Err(Error::invalid("EKF initial covariance must be positive"));
        }
        Ok(())
    }
}

/// Which state components enter the SRMSE sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SrmseComponents {
    #[default]
    FullState,
    PositionOnly,
}

/// Everything both estimators need: robot geometry, sampling, weights,
/// bounds, solver and EKF tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Arc length `s`, meters.
    pub robot_length: f64,
    /// Sample time, seconds.
    pub sample_time: f64,
    /// Horizon window length `N`, samples.
    pub horizon: usize,
    /// Measurement weighting diagonal; applies to residuals expressed in
    /// degrees.
    pub v_diag: [f64; 2],
    /// Process weighting diagonal; applies to state residuals in meters and
    /// radians.
    pub w_diag: [f64; 5],
    /// Workspace box; defaults to the box implied by `robot_length`.
    pub bounds: Option<StateBounds>,
    pub solver: SolverSettings,
    pub ekf: EkfSettings,
    /// Trailing moving-average window applied to measurements before input
    /// reconstruction; `0` or `1` disables it.
    pub input_filter_window: usize,
    pub srmse_components: SrmseComponents,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            robot_length: 1.0,
            sample_time: 0.05,
            horizon: 30,
            v_diag: [2.0, 2.0],
            w_diag: [10.0; 5],
            bounds: None,
            solver: SolverSettings::default(),
            ekf: EkfSettings::default(),
            input_filter_window: 0,
            srmse_components: SrmseComponents::FullState,
        }
    }
}

impl EstimatorConfig {
    /// Explicit bounds if configured, otherwise derived from `robot_length`.
    pub fn bounds(&self) -> StateBounds {
        self.bounds.unwrap_or_else(|| StateBounds::from_robot_length(self.robot_length))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.robot_length > 0.0) || !self.robot_length.is_finite() {
            return Err(Error::invalid("robot_length must be positive"));
        }
        if !(self.sample_time > 0.0) || !self.sample_time.is_finite() {
            return Err(Error::invalid("sample_time must be positive"));
        }
        if self.horizon < 1 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if self.v_diag.iter().any(|v| !(*v > 0.0)) || self.w_diag.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("weighting diagonals must be positive"));
        }
        self.bounds().validate()?;
        self.solver.validate()?;
        self.ekf.validate()?;
        Ok(())
    }
}

/// Horizon-sweep experiment: window lengths to evaluate on noiseless data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub horizons: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { horizons: vec![10, 20, 30, 40, 50, 60] }
    }
}

/// Monte-Carlo experiment: per-scenario noise levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonteCarloConfig {
    /// One scenario per entry; `|sigma|` is used as the Gaussian standard
    /// deviation in radians.
    pub noise_levels: Vec<NoiseLevels>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig { noise_levels: DEFAULT_NOISE_LEVELS.to_vec() }
    }
}

/// Top-level CLI configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    /// Master PRNG seed; scenario seeds derive from it.
    pub seed: u64,
    pub estimator: EstimatorConfig,
    /// Synthetic trajectory used by `generate`, `montecarlo` and
    /// `horizon-sweep`.
    pub trajectory: TrajectoryKind,
    /// Number of samples `M` for synthetic runs.
    pub samples: usize,
    /// Noise used by `generate` for the noisy log.
    pub noise: NoiseLevels,
    pub monte_carlo: MonteCarloConfig,
    pub horizon_sweep: SweepConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            seed: 1,
            estimator: EstimatorConfig::default(),
            trajectory: TrajectoryKind::default(),
            samples: 200,
            noise: NoiseLevels::new(0.02, 0.02),
            monte_carlo: MonteCarloConfig::default(),
            horizon_sweep: SweepConfig::default(),
        }
    }
}

impl AppConfig {
    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        self.trajectory.validate()?;
        if self.samples < 2 {
            return Err(Error::invalid("samples must be at least 2"));
        }
        if !self.noise.sigma_gamma.is_finite() || !self.noise.sigma_beta.is_finite() {
            return Err(Error::invalid("noise levels must be finite"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: AppConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
