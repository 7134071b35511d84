//! Constant-curvature geometry for a one-section continuum robot.
//!
//! A non-extensible section of arc length `s` bends into a circular arc
//! described by two shape parameters: the curvature angle `theta` and the
//! curvature-plane angle `phi` (measured about the base z-axis). This module
//! provides the closed-form tip position, tip rotation, the roll/pitch
//! measurement map of a tip-mounted IMU, its inverse, and the position
//! Jacobian with respect to the shape parameters.
//!
//! All angles are radians; lengths are meters. Every function here is pure.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Below this curvature angle the arc formulas switch to series expansions
/// (they divide by `theta`).
pub const SINGULARITY_EPS: f64 = 1e-6;

/// Central finite-difference step for the position Jacobian, radians.
pub const FD_STEP: f64 = 1e-6;

/// Shape of a one-section constant-curvature robot.
///
/// The fields are deliberately unconstrained beyond finiteness checks in the
/// operations, so that constraint-violating ground-truth trajectories (e.g.
/// `theta > pi/2`) can be represented. The estimator's workspace box is
/// enforced elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    /// Curvature angle, radians.
    pub theta: f64,
    /// Curvature-plane angle, radians.
    pub phi: f64,
    /// Arc length, meters (fixed per robot).
    pub s: f64,
}

impl ShapeParams {
    pub fn new(theta: f64, phi: f64, s: f64) -> Self {
        ShapeParams { theta, phi, s }
    }

    fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() || !self.phi.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite shape parameters (theta={}, phi={})",
                self.theta, self.phi
            )));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::invalid(format!("arc length must be positive, got {}", self.s)));
        }
        Ok(())
    }
}

/// Full robot state: tip position plus shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    /// Tip position in the base frame, meters.
    pub position: Vector3<f64>,
    /// Curvature angle, radians.
    pub theta: f64,
    /// Curvature-plane angle, radians.
    pub phi: f64,
}

impl RobotState {
    pub fn new(position: Vector3<f64>, theta: f64, phi: f64) -> Self {
        RobotState { position, theta, phi }
    }

    /// State consistent with forward kinematics for the given shape.
    pub fn from_shape(shape: ShapeParams) -> Result<Self> {
        Ok(RobotState {
            position: forward_position(shape)?,
            theta: shape.theta,
            phi: shape.phi,
        })
    }

    pub fn shape(&self, s: f64) -> ShapeParams {
        ShapeParams::new(self.theta, self.phi, s)
    }

    /// Packs the state as `[x, y, z, theta, phi]`.
    pub fn to_vector(&self) -> nalgebra::SVector<f64, 5> {
        nalgebra::SVector::<f64, 5>::from([
            self.position.x,
            self.position.y,
            self.position.z,
            self.theta,
            self.phi,
        ])
    }

    pub fn from_vector(v: &nalgebra::SVector<f64, 5>) -> Self {
        RobotState {
            position: Vector3::new(v[0], v[1], v[2]),
            theta: v[3],
            phi: v[4],
        }
    }
}

/// One IMU sample: Euler roll and pitch of the tip, radians.
///
/// Values produced by [`measurement_map`] lie in the principal ranges
/// `gamma in [-pi/2, pi/2]`, `beta in [-pi/2, pi/2]`; noisy sensor data may
/// fall slightly outside and is clamped before inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Roll angle, radians.
    pub gamma: f64,
    /// Pitch angle, radians.
    pub beta: f64,
}

impl Measurement {
    pub fn new(gamma: f64, beta: f64) -> Self {
        Measurement { gamma, beta }
    }

    /// Clamps both angles into the principal ranges accepted by
    /// [`invert_measurement`].
    pub fn clamped_principal(&self) -> Self {
        use std::f64::consts::FRAC_PI_2;
        Measurement {
            gamma: self.gamma.clamp(-FRAC_PI_2, FRAC_PI_2),
            beta: self.beta.clamp(-FRAC_PI_2, FRAC_PI_2),
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || !self.beta.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite measurement (gamma={}, beta={})",
                self.gamma, self.beta
            )));
        }
        Ok(())
    }
}

/// Tip position of the arc in the base frame.
///
/// `p = s/theta * [cos(phi)(cos(theta)-1), sin(phi)(cos(theta)-1), sin(theta)]`,
/// with a second-order series expansion below [`SINGULARITY_EPS`] so the
/// straight configuration is a routine operating point.
pub fn forward_position(shape: ShapeParams) -> Result<Vector3<f64>> {
    shape.validate()?;
    let ShapeParams { theta, phi, s } = shape;
    let (sin_phi, cos_phi) = phi.sin_cos();
    if theta.abs() < SINGULARITY_EPS {
        // (cos t - 1)/t = -t/2 (1 - t^2/12) + O(t^5), sin t / t = 1 - t^2/6 + O(t^4)
        let bend = -0.5 * theta * (1.0 - theta * theta / 12.0);
        let axial = 1.0 - theta * theta / 6.0;
        return Ok(Vector3::new(s * cos_phi * bend, s * sin_phi * bend, s * axial));
    }
    let (sin_theta, cos_theta) = theta.sin_cos();
    let bend = (cos_theta - 1.0) / theta;
    Ok(Vector3::new(
        s * cos_phi * bend,
        s * sin_phi * bend,
        s * sin_theta / theta,
    ))
}

/// Rotation of the tip frame with respect to the base frame.
///
/// Equals the composition `Rz(phi) * Ry(-theta) * Rz(-phi)`: a rotation by
/// `-theta` about the in-plane axis `(-sin(phi), cos(phi), 0)`. Written out
/// entrywise so the correspondence with the measurement map is explicit.
pub fn rotation_from_shape(shape: ShapeParams) -> Result<Rotation3<f64>> {
    shape.validate()?;
    let (sin_theta, cos_theta) = shape.theta.sin_cos();
    let (sin_phi, cos_phi) = shape.phi.sin_cos();
    let cm1 = cos_theta - 1.0;
    let m = Matrix3::new(
        cos_phi * cos_phi * cm1 + 1.0,
        sin_phi * cos_phi * cm1,
        -cos_phi * sin_theta,
        sin_phi * cos_phi * cm1,
        sin_phi * sin_phi * cm1 + 1.0,
        -sin_phi * sin_theta,
        cos_phi * sin_theta,
        sin_phi * sin_theta,
        cos_theta,
    );
    Ok(Rotation3::from_matrix_unchecked(m))
}

/// Expected IMU roll/pitch for a given shape: the measurement model `h`.
///
/// `gamma = asin(-cos(phi) sin(theta))`, `beta = atan(sin(phi) tan(theta))`.
/// Pitch is evaluated as `atan2(sin(phi) sin(theta), cos(theta))`, which is
/// identical on `theta in (-pi/2, pi/2)` and extends continuously through
/// `theta = pi/2`, where `beta = +/- pi/2` as `sin(phi)` dictates. That
/// continuation is what lets constraint-violating trajectories be sampled.
pub fn measurement_map(shape: ShapeParams) -> Result<Measurement> {
    shape.validate()?;
    let (sin_theta, cos_theta) = shape.theta.sin_cos();
    let (sin_phi, cos_phi) = shape.phi.sin_cos();
    let gamma = (-cos_phi * sin_theta).clamp(-1.0, 1.0).asin();
    let y = sin_phi * sin_theta;
    let beta = if y == 0.0 && cos_theta == 0.0 { 0.0 } else { y.atan2(cos_theta) };
    Ok(Measurement::new(gamma, beta))
}

/// Recovers the shape angles from one roll/pitch sample.
///
/// Closed form: `theta = acos(cos(beta) cos(gamma))` in `[0, pi/2]` and
/// `phi = atan2(sin(beta) cos(gamma), -sin(gamma))`. At the straight
/// configuration `phi` is unobservable and 0 is returned by convention.
/// Inputs must lie in the principal ranges (`|gamma|, |beta| <= pi/2`).
pub fn invert_measurement(z: Measurement) -> Result<(f64, f64)> {
    use std::f64::consts::FRAC_PI_2;
    z.validate()?;
    if z.gamma.abs() > FRAC_PI_2 || z.beta.abs() > FRAC_PI_2 {
        return Err(Error::invalid(format!(
            "measurement outside principal ranges (gamma={}, beta={})",
            z.gamma, z.beta
        )));
    }
    let (sin_gamma, cos_gamma) = z.gamma.sin_cos();
    let (sin_beta, cos_beta) = z.beta.sin_cos();
    let theta = (cos_beta * cos_gamma).clamp(-1.0, 1.0).acos();
    let y = sin_beta * cos_gamma;
    let x = -sin_gamma;
    let phi = if y == 0.0 && x == 0.0 { 0.0 } else { y.atan2(x) };
    Ok((theta, phi))
}

/// Derivative of the tip position with respect to `(theta, phi)`.
///
/// Central finite differences with step [`FD_STEP`]; below the straight-
/// configuration threshold the series limit is used instead.
pub fn position_jacobian(shape: ShapeParams) -> Result<Matrix3x2<f64>> {
    shape.validate()?;
    let ShapeParams { theta, phi, s } = shape;
    if theta.abs() < SINGULARITY_EPS {
        let (sin_phi, cos_phi) = phi.sin_cos();
        // d/dtheta [(cos t - 1)/t] = -1/2 + t^2/8 + O(t^4)
        // d/dtheta [sin t / t]     = -t/3 + O(t^3)
        let dbend = -0.5 + theta * theta / 8.0;
        let bend = -0.5 * theta * (1.0 - theta * theta / 12.0);
        return Ok(Matrix3x2::new(
            s * cos_phi * dbend,
            -s * sin_phi * bend,
            s * sin_phi * dbend,
            s * cos_phi * bend,
            -s * theta / 3.0,
            0.0,
        ));
    }
    let h = FD_STEP;
    let p_tp = forward_position(ShapeParams::new(theta + h, phi, s))?;
    let p_tm = forward_position(ShapeParams::new(theta - h, phi, s))?;
    let p_pp = forward_position(ShapeParams::new(theta, phi + h, s))?;
    let p_pm = forward_position(ShapeParams::new(theta, phi - h, s))?;
    let d_theta = (p_tp - p_tm) / (2.0 * h);
    let d_phi = (p_pp - p_pm) / (2.0 * h);
    Ok(Matrix3x2::from_columns(&[d_theta, d_phi]))
}

/// Derivative of the measurement map with respect to `(theta, phi)`.
///
/// Used as the measurement block of the estimator Jacobians. The roll row is
/// guarded against the `|cos(phi) sin(theta)| -> 1` singularity of `asin`.
pub fn measurement_jacobian(shape: ShapeParams) -> Result<Matrix2<f64>> {
    shape.validate()?;
    let (sin_theta, cos_theta) = shape.theta.sin_cos();
    let (sin_phi, cos_phi) = shape.phi.sin_cos();
    let arg = cos_phi * sin_theta;
    let root = (1.0 - arg * arg).max(1e-12).sqrt();
    let dgamma_dtheta = -cos_phi * cos_theta / root;
    let dgamma_dphi = sin_phi * sin_theta / root;
    let denom = (sin_phi * sin_theta).powi(2) + cos_theta * cos_theta;
    let denom = denom.max(1e-12);
    let dbeta_dtheta = sin_phi / denom;
    let dbeta_dphi = cos_theta * cos_phi * sin_theta / denom;
    Ok(Matrix2::new(dgamma_dtheta, dgamma_dphi, dbeta_dtheta, dbeta_dphi))
}

/// Rotation built from Euler roll/pitch/yaw: `Rz(alpha) * Ry(beta) * Rx(gamma)`.
pub fn rpy_rotation(gamma: f64, beta: f64, alpha: f64) -> Result<Rotation3<f64>> {
    if !gamma.is_finite() || !beta.is_finite() || !alpha.is_finite() {
        return Err(Error::invalid("non-finite Euler angles"));
    }
    Ok(Rotation3::from_euler_angles(gamma, beta, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    /// Analytic derivatives of the tip position, independent of the
    /// finite-difference implementation path.
    pub(crate) fn analytic_position_jacobian(shape: ShapeParams) -> Matrix3x2<f64> {
        let ShapeParams { theta, phi, s } = shape;
        let (sin_theta, cos_theta) = theta.sin_cos();
        let (sin_phi, cos_phi) = phi.sin_cos();
        let bend = (cos_theta - 1.0) / theta;
        let dbend = (-theta * sin_theta - cos_theta + 1.0) / (theta * theta);
        let daxial = (theta * cos_theta - sin_theta) / (theta * theta);
        Matrix3x2::new(
            s * cos_phi * dbend,
            -s * sin_phi * bend,
            s * sin_phi * dbend,
            s * cos_phi * bend,
            s * daxial,
            0.0,
        )
    }

    fn feasible_rng_shape(rng: &mut impl Rng, s: f64) -> ShapeParams {
        ShapeParams::new(rng.gen_range(1e-3..FRAC_PI_2), rng.gen_range(-PI..PI), s)
    }

    #[test]
    fn forward_position_straight_limit() {
        let p = forward_position(ShapeParams::new(0.0, 0.7, 1.0)).unwrap();
        assert_abs_diff_eq!(p, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn forward_position_quarter_bend() {
        let p = forward_position(ShapeParams::new(FRAC_PI_2, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p.x, -2.0 / PI, epsilon = 1e-14);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.z, 2.0 / PI, epsilon = 1e-14);
    }

    #[test]
    fn forward_position_frozen_oracle_value() {
        // High-precision evaluation of the closed form at (pi/3, pi/4, s=0.2).
        let p = forward_position(ShapeParams::new(FRAC_PI_3, FRAC_PI_4, 0.2)).unwrap();
        assert_abs_diff_eq!(p.x, -0.06752372371178296, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, -0.06752372371178296, epsilon = 1e-15);
        assert_abs_diff_eq!(p.z, 0.16539866862653763, epsilon = 1e-15);
    }

    #[test]
    fn forward_position_rejects_non_finite() {
        assert!(forward_position(ShapeParams::new(f64::NAN, 0.0, 1.0)).is_err());
        assert!(forward_position(ShapeParams::new(0.1, 0.0, 0.0)).is_err());
        assert!(forward_position(ShapeParams::new(0.1, 0.0, -1.0)).is_err());
    }

    #[test]
    fn forward_position_continuous_across_singularity_branch() {
        for phi in [0.0, 1.0, -2.3] {
            let direct = forward_position(ShapeParams::new(SINGULARITY_EPS, phi, 1.0)).unwrap();
            let series =
                forward_position(ShapeParams::new(SINGULARITY_EPS * 0.999, phi, 1.0)).unwrap();
            assert!((direct - series).norm() < 1e-8);
        }
    }

    #[test]
    fn rotation_identity_at_zero_theta() {
        let r = rotation_from_shape(ShapeParams::new(0.0, 1.3, 1.0)).unwrap();
        assert_abs_diff_eq!(*r.matrix(), Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_quarter_bend_in_yz_plane() {
        let r = rotation_from_shape(ShapeParams::new(FRAC_PI_2, FRAC_PI_2, 1.0)).unwrap();
        let expected = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert_abs_diff_eq!(*r.matrix(), expected, epsilon = 1e-15);
    }

    #[test]
    fn rotation_matches_elementary_composition_oracle() {
        // Rz(phi) * Ry(-theta) * Rz(-phi): rotation about the curvature-plane axis.
        let (theta, phi) = (FRAC_PI_4, FRAC_PI_3);
        let oracle = Rotation3::from_axis_angle(&Vector3::z_axis(), phi)
            * Rotation3::from_axis_angle(&Vector3::y_axis(), -theta)
            * Rotation3::from_axis_angle(&Vector3::z_axis(), -phi);
        let r = rotation_from_shape(ShapeParams::new(theta, phi, 1.0)).unwrap();
        assert_abs_diff_eq!(*r.matrix(), *oracle.matrix(), epsilon = 1e-14);
    }

    #[test]
    fn rotation_orthonormal_and_proper_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let shape = feasible_rng_shape(&mut rng, 1.0);
            let m = *rotation_from_shape(shape).unwrap().matrix();
            assert_abs_diff_eq!(m.transpose() * m, Matrix3::identity(), epsilon = 1e-10);
            assert_abs_diff_eq!(m.determinant(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rotation_third_column_is_unit_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let shape = feasible_rng_shape(&mut rng, 1.0);
            let m = *rotation_from_shape(shape).unwrap().matrix();
            let (st, ct) = shape.theta.sin_cos();
            let (sp, cp) = shape.phi.sin_cos();
            let tangent = Vector3::new(-cp * st, -sp * st, ct);
            assert_abs_diff_eq!(m.column(2).into_owned(), tangent, epsilon = 1e-12);
        }
    }

    #[test]
    fn measurement_map_examples() {
        let z = measurement_map(ShapeParams::new(0.0, 1.1, 1.0)).unwrap();
        assert_abs_diff_eq!(z.gamma, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.beta, 0.0, epsilon = 1e-15);

        let z = measurement_map(ShapeParams::new(FRAC_PI_4, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(z.gamma, -FRAC_PI_4, epsilon = 1e-14);
        assert_abs_diff_eq!(z.beta, 0.0, epsilon = 1e-14);

        let z = measurement_map(ShapeParams::new(FRAC_PI_3, FRAC_PI_2, 1.0)).unwrap();
        assert_abs_diff_eq!(z.gamma, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(z.beta, FRAC_PI_3, epsilon = 1e-14);
    }

    #[test]
    fn measurement_map_continuous_at_quarter_turn() {
        let below = measurement_map(ShapeParams::new(FRAC_PI_2 - 1e-9, 1.0, 1.0)).unwrap();
        let at = measurement_map(ShapeParams::new(FRAC_PI_2, 1.0, 1.0)).unwrap();
        let above = measurement_map(ShapeParams::new(FRAC_PI_2 + 1e-9, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(at.beta, FRAC_PI_2, epsilon = 1e-8);
        assert!((below.beta - at.beta).abs() < 1e-8);
        assert!((above.beta - at.beta).abs() < 1e-8);
    }

    #[test]
    fn invert_measurement_examples() {
        let (theta, phi) = invert_measurement(Measurement::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(theta, 0.0, epsilon = 1e-15);
        assert_eq!(phi, 0.0); // convention: phi unobservable when straight

        let (theta, phi) = invert_measurement(Measurement::new(0.0, FRAC_PI_3)).unwrap();
        assert_abs_diff_eq!(theta, FRAC_PI_3, epsilon = 1e-14);
        assert_abs_diff_eq!(phi, FRAC_PI_2, epsilon = 1e-14);
    }

    #[test]
    fn invert_measurement_rejects_out_of_range() {
        assert!(invert_measurement(Measurement::new(2.0, 0.0)).is_err());
        assert!(invert_measurement(Measurement::new(0.0, -2.0)).is_err());
        assert!(invert_measurement(Measurement::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn measurement_round_trip_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let theta = rng.gen_range(1e-6..FRAC_PI_2);
            let phi = rng.gen_range(-PI..PI);
            let z = measurement_map(ShapeParams::new(theta, phi, 1.0)).unwrap();
            let (theta_r, phi_r) = invert_measurement(z).unwrap();
            assert!((theta_r - theta).abs() < 1e-9, "theta {theta} -> {theta_r}");
            let dphi = (phi_r - phi + PI).rem_euclid(2.0 * PI) - PI;
            assert!(dphi.abs() < 1e-9 / theta.sin().max(1e-3), "phi {phi} -> {phi_r}");
            let z_r = measurement_map(ShapeParams::new(theta_r, phi_r, 1.0)).unwrap();
            assert!((z_r.gamma - z.gamma).abs() < 1e-9);
            assert!((z_r.beta - z.beta).abs() < 1e-9);
        }
    }

    #[test]
    fn invert_measurement_matches_grid_search_oracle() {
        // Exhaustive minimization of |h(theta, phi) - z| on a 2000x2000 grid.
        let spots = [
            Measurement::new(-0.3, 0.4),
            Measurement::new(0.1, 1.2),
            Measurement::new(-0.7, 0.05),
            Measurement::new(0.0, 0.9),
            Measurement::new(-0.45, -0.6),
        ];
        for z in spots {
            let (theta, phi) = invert_measurement(z).unwrap();
            let (mut best_theta, mut best_phi, mut best_err) = (0.0, 0.0, f64::INFINITY);
            let n = 2000;
            for i in 0..n {
                let t = FRAC_PI_2 * (i as f64 + 0.5) / n as f64;
                for j in 0..n {
                    let p = -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64;
                    let h = measurement_map(ShapeParams::new(t, p, 1.0)).unwrap();
                    let err = (h.gamma - z.gamma).powi(2) + (h.beta - z.beta).powi(2);
                    if err < best_err {
                        best_err = err;
                        best_theta = t;
                        best_phi = p;
                    }
                }
            }
            let cell = FRAC_PI_2 / n as f64 + 2.0 * PI / n as f64;
            assert!((theta - best_theta).abs() < cell, "theta {theta} vs grid {best_theta}");
            let dphi = (phi - best_phi + PI).rem_euclid(2.0 * PI) - PI;
            assert!(dphi.abs() < cell / theta.sin().max(0.05), "phi {phi} vs grid {best_phi}");
        }
    }

    #[test]
    fn position_jacobian_straight_limit() {
        let j = position_jacobian(ShapeParams::new(0.0, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(j.column(0).into_owned(), Vector3::new(-0.5, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn position_jacobian_quarter_bend_axial_derivative() {
        // dz/dtheta = s (theta cos(theta) - sin(theta)) / theta^2 = -4/pi^2 at pi/2.
        let j = position_jacobian(ShapeParams::new(FRAC_PI_2, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(j[(2, 0)], -0.4052847345693511, epsilon = 1e-9);
    }

    #[test]
    fn position_jacobian_matches_analytic_oracle_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..500 {
            let shape = ShapeParams::new(
                rng.gen_range(0.01..FRAC_PI_2),
                rng.gen_range(-PI..PI),
                rng.gen_range(0.05..2.0),
            );
            let fd = position_jacobian(shape).unwrap();
            let exact = analytic_position_jacobian(shape);
            let rel = (fd - exact).norm() / exact.norm();
            assert!(rel < 1e-5, "relative error {rel} at {shape:?}");
        }
    }

    #[test]
    fn measurement_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let h = 1e-6;
        for _ in 0..200 {
            let theta = rng.gen_range(0.05..FRAC_PI_2 - 0.05);
            let phi = rng.gen_range(-PI..PI);
            let jac = measurement_jacobian(ShapeParams::new(theta, phi, 1.0)).unwrap();
            let f = |t: f64, p: f64| {
                let z = measurement_map(ShapeParams::new(t, p, 1.0)).unwrap();
                Vector3::new(z.gamma, z.beta, 0.0)
            };
            let dt = (f(theta + h, phi) - f(theta - h, phi)) / (2.0 * h);
            let dp = (f(theta, phi + h) - f(theta, phi - h)) / (2.0 * h);
            assert_abs_diff_eq!(jac[(0, 0)], dt.x, epsilon = 1e-5);
            assert_abs_diff_eq!(jac[(1, 0)], dt.y, epsilon = 1e-5);
            assert_abs_diff_eq!(jac[(0, 1)], dp.x, epsilon = 1e-5);
            assert_abs_diff_eq!(jac[(1, 1)], dp.y, epsilon = 1e-5);
        }
    }

    #[test]
    fn chord_length_identity_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..500 {
            let s = rng.gen_range(0.05..2.0);
            let shape = feasible_rng_shape(&mut rng, s);
            let p = forward_position(shape).unwrap();
            let chord = 2.0 * s * (shape.theta / 2.0).sin() / shape.theta;
            assert!((p.norm() - chord).abs() / chord < 1e-9);
            assert!(p.norm() <= s * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rpy_rotation_examples_and_orthogonality() {
        let r = rpy_rotation(0.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(*r.matrix(), Matrix3::identity(), epsilon = 1e-15);

        let r = rpy_rotation(FRAC_PI_2, 0.0, 0.0).unwrap();
        let expected = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert_abs_diff_eq!(*r.matrix(), expected, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let m = *rpy_rotation(
                rng.gen_range(-PI..PI),
                rng.gen_range(-PI..PI),
                rng.gen_range(-PI..PI),
            )
            .unwrap()
            .matrix();
            assert_abs_diff_eq!(m.transpose() * m, Matrix3::identity(), epsilon = 1e-12);
        }
    }

    #[test]
    fn rpy_third_row_matches_measurement_map_source() {
        // Row 3 of Rz(a)Ry(b)Rx(g) is (-sin b, cos b sin g, cos b cos g); equating
        // it with the tip rotation's row 3 is what yields the closed-form h.
        let (gamma, beta) = (0.3, -0.5);
        let m = *rpy_rotation(gamma, beta, 0.7).unwrap().matrix();
        assert_abs_diff_eq!(m[(2, 0)], -beta.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(m[(2, 1)], beta.cos() * gamma.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(m[(2, 2)], beta.cos() * gamma.cos(), epsilon = 1e-14);
    }
}
