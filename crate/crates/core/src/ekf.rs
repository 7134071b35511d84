//! Extended Kalman filter baseline.
//!
//! Standard predict/update on the same motion and measurement models as the
//! horizon estimator: the mean propagates through the Euler step with the
//! reconstructed inputs, the transition Jacobian comes from central finite
//! differences of the step function, and the correction uses a Joseph-form
//! covariance update. Unlike the horizon estimator the filter knows nothing
//! about the workspace box; its mean is free to leave it.

use nalgebra::{SMatrix, SVector, Vector2};

use crate::config::EstimatorConfig;
use crate::error::{Error, Result};
use crate::kinematics::{self, Measurement, RobotState, ShapeParams};
use crate::motion::{self, SampleTime, VelocityInput};

type Matrix2 = SMatrix<f64, 2, 2>;
type Matrix5 = SMatrix<f64, 5, 5>;
type Matrix2x5 = SMatrix<f64, 2, 5>;

/// Gaussian belief over the packed state `[x, y, z, theta, phi]`.
#[derive(Debug, Clone, Copy)]
pub struct EkfState {
    pub mean: RobotState,
    pub covariance: Matrix5,
}

/// Process and measurement noise covariances.
#[derive(Debug, Clone, Copy)]
pub struct EkfNoise {
    pub q: Matrix5,
    pub r: Matrix2,
}

impl EkfNoise {
    pub fn from_config(cfg: &EstimatorConfig) -> Self {
        EkfNoise {
            q: Matrix5::from_diagonal(&SVector::from(cfg.ekf.q_diag)),
            r: Matrix2::from_diagonal(&Vector2::from(cfg.ekf.r_diag)),
        }
    }
}

fn symmetrize(m: &Matrix5) -> Matrix5 {
    (m + m.transpose()) * 0.5
}

/// Transition Jacobian `d step / d x` by central finite differences.
fn step_jacobian(x: &RobotState, u: VelocityInput, dt: SampleTime, s: f64) -> Result<Matrix5> {
    let base = x.to_vector();
    let mut jac = Matrix5::zeros();
    for j in 0..5 {
        let h = 1e-6 * base[j].abs().max(1.0);
        let mut plus = base;
        let mut minus = base;
        plus[j] += h;
        minus[j] -= h;
        let f_plus = motion::step(&RobotState::from_vector(&plus), u, dt, s)?.to_vector();
        let f_minus = motion::step(&RobotState::from_vector(&minus), u, dt, s)?.to_vector();
        jac.set_column(j, &((f_plus - f_minus) / (2.0 * h)));
    }
    Ok(jac)
}

/// Propagates the belief one step: `mean' = step(mean, u)`,
/// `P' = F P F^T + Q`.
pub fn predict(
    state: &EkfState,
    u: VelocityInput,
    dt: SampleTime,
    q: &Matrix5,
    s: f64,
) -> Result<EkfState> {
    let mean = motion::step(&state.mean, u, dt, s)?;
    let f = step_jacobian(&state.mean, u, dt, s)?;
    let covariance = symmetrize(&(f * state.covariance * f.transpose() + q));
    Ok(EkfState { mean, covariance })
}

/// Folds one measurement into the belief with the standard Kalman gain and a
/// Joseph-form covariance update.
pub fn update(state: &EkfState, z: Measurement, r: &Matrix2, s: f64) -> Result<EkfState> {
    let shape = state.mean.shape(s);
    let predicted = kinematics::measurement_map(shape)?;
    let innovation = Vector2::new(z.gamma - predicted.gamma, z.beta - predicted.beta);
    if !innovation.x.is_finite() || !innovation.y.is_finite() {
        return Err(Error::invalid("non-finite innovation"));
    }
    let h_shape = kinematics::measurement_jacobian(shape)?;
    let mut h = Matrix2x5::zeros();
    h.fixed_view_mut::<2, 2>(0, 3).copy_from(&h_shape);

    let innovation_cov = h * state.covariance * h.transpose() + r;
    let inv = innovation_cov.try_inverse().ok_or(Error::SingularInnovation)?;
    let gain = state.covariance * h.transpose() * inv;

    let mean = RobotState::from_vector(&(state.mean.to_vector() + gain * innovation));
    let identity = Matrix5::identity();
    let shrink = identity - gain * h;
    let covariance =
        symmetrize(&(shrink * state.covariance * shrink.transpose() + gain * r * gain.transpose()));
    Ok(EkfState { mean, covariance })
}

/// Initial belief: shape from the first (clamped) measurement, position by
/// forward kinematics, isotropic covariance.
pub fn initial_state(z: &Measurement, cfg: &EstimatorConfig) -> Result<EkfState> {
    let (theta, phi) = kinematics::invert_measurement(z.clamped_principal())?;
    let mean = RobotState::from_shape(ShapeParams::new(theta, phi, cfg.robot_length))?;
    Ok(EkfState { mean, covariance: Matrix5::identity() * cfg.ekf.initial_covariance })
}

/// Filters the whole measurement stream, emitting one mean state per sample
/// (the filter produces estimates from sample 0, unlike the horizon
/// estimator).
pub fn run_filter(measurements: &[Measurement], cfg: &EstimatorConfig) -> Result<Vec<RobotState>> {
    cfg.validate()?;
    if measurements.is_empty() {
        return Err(Error::invalid("filter needs at least one measurement"));
    }
    let noise = EkfNoise::from_config(cfg);
    let dt = SampleTime::new(cfg.sample_time)?;
    let s = cfg.robot_length;
    let inputs = if measurements.len() >= 2 {
        let filtered = motion::smooth_measurements(measurements, cfg.input_filter_window);
        motion::reconstruct_inputs(&filtered, dt)?
    } else {
        Vec::new()
    };

    let mut state = initial_state(&measurements[0], cfg)?;
    state = update(&state, measurements[0], &noise.r, s)?;
    let mut estimates = vec![state.mean];
    for (k, z) in measurements.iter().enumerate().skip(1) {
        state = predict(&state, inputs[k - 1], dt, &noise.q, s)?;
        state = update(&state, *z, &noise.r, s)?;
        estimates.push(state.mean);
    }
    Ok(estimates)
}
