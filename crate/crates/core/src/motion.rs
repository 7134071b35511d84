//! Discrete-time motion model and input reconstruction.
//!
//! The state evolves as `xdot = [J(theta, phi) * u; u]` where `u` collects the
//! shape-parameter rates, integrated with a forward-Euler step. Inputs are not
//! sensed directly; they are rebuilt by differencing the shape angles implied
//! by consecutive IMU samples.

use std::f64::consts::PI;

use nalgebra::SVector;

use crate::error::{Error, Result};
use crate::kinematics::{self, Measurement, RobotState};

/// Shape-parameter rates `(theta_dot, phi_dot)`, radians per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityInput {
    pub theta_dot: f64,
    pub phi_dot: f64,
}

impl VelocityInput {
    pub fn new(theta_dot: f64, phi_dot: f64) -> Self {
        VelocityInput { theta_dot, phi_dot }
    }

    pub fn zero() -> Self {
        VelocityInput::new(0.0, 0.0)
    }
}

/// Sampling interval, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTime(f64);

impl SampleTime {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("sample time must be positive, got {dt}")));
        }
        Ok(SampleTime(dt))
    }

    pub fn seconds(&self) -> f64 {
        self.0
    }
}

/// Time derivative of the full state: `[J * u; u]`.
pub fn state_derivative(x: &RobotState, u: VelocityInput, s: f64) -> Result<SVector<f64, 5>> {
    let jac = kinematics::position_jacobian(x.shape(s))?;
    let rates = nalgebra::Vector2::new(u.theta_dot, u.phi_dot);
    let pdot = jac * rates;
    Ok(SVector::<f64, 5>::from([pdot.x, pdot.y, pdot.z, u.theta_dot, u.phi_dot]))
}

/// One forward-Euler step: `x' = x + dt * f(x, u)`.
///
/// This is the transition used by both the MHE process term and the EKF
/// predict step.
pub fn step(x: &RobotState, u: VelocityInput, dt: SampleTime, s: f64) -> Result<RobotState> {
    let xdot = state_derivative(x, u, s)?;
    let next = x.to_vector() + xdot * dt.seconds();
    Ok(RobotState::from_vector(&next))
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(delta: f64) -> f64 {
    let wrapped = (-delta + PI).rem_euclid(2.0 * PI) - PI;
    -wrapped
}

/// Rebuilds the shape-parameter rates from consecutive IMU samples.
///
/// Each sample is clamped into the principal ranges and inverted to
/// `(theta, phi)`; consecutive pairs are differenced over `dt`, with the
/// `phi` difference wrapped into `(-pi, pi]`. Returns one input per
/// consecutive pair (`len - 1` entries).
pub fn reconstruct_inputs(
    measurements: &[Measurement],
    dt: SampleTime,
) -> Result<Vec<VelocityInput>> {
    if measurements.len() < 2 {
        return Err(Error::invalid(format!(
            "input reconstruction needs at least 2 measurements, got {}",
            measurements.len()
        )));
    }
    let shapes: Vec<(f64, f64)> = measurements
        .iter()
        .map(|z| kinematics::invert_measurement(z.clamped_principal()))
        .collect::<Result<_>>()?;
    Ok(shapes
        .windows(2)
        .map(|w| {
            let (theta0, phi0) = w[0];
            let (theta1, phi1) = w[1];
            VelocityInput::new(
                (theta1 - theta0) / dt.seconds(),
                wrap_angle(phi1 - phi0) / dt.seconds(),
            )
        })
        .collect())
}

/// Trailing moving average over the measurement stream, window length
/// `window` (`<= 1` is the identity). Optional pre-filter for noisy logs.
pub fn smooth_measurements(measurements: &[Measurement], window: usize) -> Vec<Measurement> {
    if window <= 1 {
        return measurements.to_vec();
    }
    measurements
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let lo = i.saturating_sub(window - 1);
            let span = &measurements[lo..=i];
            let n = span.len() as f64;
            Measurement::new(
                span.iter().map(|z| z.gamma).sum::<f64>() / n,
                span.iter().map(|z| z.beta).sum::<f64>() / n,
            )
        })
        .collect()
}
