//! Moving horizon estimation over a sliding window of IMU samples.
//!
//! Each window solves a box-constrained least-squares problem whose decision
//! vector stacks the `N` window states. The residual stacks the V-weighted
//! measurement mismatches (expressed in degrees, so the stock weighting
//! matrices apply unchanged) and the W-weighted one-step process mismatches.
//! The workspace box is enforced exactly by the solver's projection.
//!
//! The window cost never observes position directly (the IMU senses only
//! roll and pitch), so the position block of a window solution is determined
//! only up to a common translation. The sliding loop pins that free component
//! kinematically: warm-start positions are rebuilt by forward kinematics of
//! the warm-start shapes, and the emitted estimate carries the forward
//! kinematics of its estimated shape. For a constant-curvature section the
//! tip position is a function of the shape, so this is the one anchor that is
//! independent of warm-start content.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVector, Vector2};

use crate::config::{EstimatorConfig, StateBounds};
use crate::error::{Error, Result};
use crate::kinematics::{self, Measurement, RobotState, ShapeParams};
use crate::motion::{self, SampleTime, VelocityInput};
use crate::solver::{self, NlsProblem, SolveReport, SolverSettings};

const RAD_TO_DEG: f64 = 180.0 / PI;

/// Finite-difference step for the shape sensitivity of the propagated
/// position inside the process Jacobian. Coarser than the position-Jacobian
/// step because it differences an already finite-differenced quantity.
const PROCESS_FD_STEP: f64 = 1e-4;

/// Positive-definite diagonal weighting for the window cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    /// Measurement weighting `(gamma, beta)`; applies to degree residuals.
    pub v_diag: Vector2<f64>,
    /// Process weighting for `[x, y, z, theta, phi]` residuals.
    pub w_diag: SVector<f64, 5>,
}

impl Weights {
    pub fn new(v_diag: [f64; 2], w_diag: [f64; 5]) -> Result<Self> {
        if v_diag.iter().any(|v| !(*v > 0.0)) || w_diag.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("weighting diagonals must be positive"));
        }
        Ok(Weights { v_diag: Vector2::from(v_diag), w_diag: SVector::from(w_diag) })
    }
}

/// One horizon window: measurements, reconstructed inputs, weighting, box
/// bounds, and a per-stage initial guess.
#[derive(Debug, Clone)]
pub struct MheProblem {
    pub measurements: Vec<Measurement>,
    pub inputs: Vec<VelocityInput>,
    pub dt: SampleTime,
    pub robot_length: f64,
    pub weights: Weights,
    pub bounds: StateBounds,
    pub guess: Vec<RobotState>,
}

impl MheProblem {
    pub fn new(
        measurements: Vec<Measurement>,
        inputs: Vec<VelocityInput>,
        guess: Vec<RobotState>,
        cfg: &EstimatorConfig,
    ) -> Result<Self> {
        let n = measurements.len();
        if n == 0 {
            return Err(Error::invalid("window must contain at least one measurement"));
        }
        if inputs.len() + 1 != n {
            return Err(Error::invalid(format!(
                "window with {n} measurements needs {} inputs, got {}",
                n - 1,
                inputs.len()
            )));
        }
        if guess.len() != n {
            return Err(Error::invalid(format!(
                "initial guess has {} stages, window has {n}",
                guess.len()
            )));
        }
        Ok(MheProblem {
            measurements,
            inputs,
            dt: SampleTime::new(cfg.sample_time)?,
            robot_length: cfg.robot_length,
            weights: Weights::new(cfg.v_diag, cfg.w_diag)?,
            bounds: cfg.bounds(),
            guess,
        })
    }

    pub fn horizon(&self) -> usize {
        self.measurements.len()
    }

    /// Decision vector for the solver: the stacked per-stage states.
    pub fn guess_vector(&self) -> DVector<f64> {
        stack_states(&self.guess)
    }
}

/// Result of one window solve.
#[derive(Debug, Clone)]
pub struct MheEstimate {
    /// Per-stage solution states; each satisfies the box exactly.
    pub states: Vec<RobotState>,
    /// Reported window cost: the plain sum of squared weighted residuals.
    pub cost: f64,
    pub report: SolveReport,
}

fn stack_states(states: &[RobotState]) -> DVector<f64> {
    let mut v = DVector::zeros(5 * states.len());
    for (k, state) in states.iter().enumerate() {
        v.rows_mut(5 * k, 5).copy_from(&state.to_vector());
    }
    v
}

fn unstack_states(v: &DVector<f64>) -> Vec<RobotState> {
    (0..v.len() / 5)
        .map(|k| RobotState::from_vector(&SVector::from_fn(|i, _| v[5 * k + i])))
        .collect()
}

fn stage_state(v: &DVector<f64>, k: usize) -> RobotState {
    RobotState::from_vector(&SVector::from_fn(|i, _| v[5 * k + i]))
}

/// Window residual: `2N` measurement rows followed by `5(N-1)` process rows.
/// Any kinematics failure surfaces as NaN entries, which the solver reports
/// as a numeric failure carrying the iterate.
fn window_residual(
    v: &DVector<f64>,
    measurements: &[Measurement],
    inputs: &[VelocityInput],
    dt: SampleTime,
    s: f64,
    weights: &Weights,
) -> DVector<f64> {
    let n = measurements.len();
    let mut r = DVector::zeros(2 * n + 5 * (n.saturating_sub(1)));
    let sqrt_v = weights.v_diag.map(f64::sqrt);
    let sqrt_w = weights.w_diag.map(f64::sqrt);
    for (k, z) in measurements.iter().enumerate() {
        let state = stage_state(v, k);
        match kinematics::measurement_map(state.shape(s)) {
            Ok(h) => {
                r[2 * k] = sqrt_v.x * RAD_TO_DEG * (z.gamma - h.gamma);
                r[2 * k + 1] = sqrt_v.y * RAD_TO_DEG * (z.beta - h.beta);
            }
            Err(_) => {
                r[2 * k] = f64::NAN;
                r[2 * k + 1] = f64::NAN;
            }
        }
    }
    for (k, u) in inputs.iter().enumerate() {
        let current = stage_state(v, k);
        let next = stage_state(v, k + 1);
        let row = 2 * n + 5 * k;
        match motion::step(&current, *u, dt, s) {
            Ok(predicted) => {
                let diff = next.to_vector() - predicted.to_vector();
                for i in 0..5 {
                    r[row + i] = sqrt_w[i] * diff[i];
                }
            }
            Err(_) => {
                for i in 0..5 {
                    r[row + i] = f64::NAN;
                }
            }
        }
    }
    r
}

/// Analytic-by-blocks window Jacobian. Measurement rows use the closed-form
/// shape sensitivity of the measurement map; process rows use the identity
/// structure of the Euler step plus a finite-difference shape sensitivity of
/// the propagated position.
fn window_jacobian(
    v: &DVector<f64>,
    inputs: &[VelocityInput],
    n: usize,
    dt: SampleTime,
    s: f64,
    weights: &Weights,
) -> DMatrix<f64> {
    let rows = 2 * n + 5 * (n.saturating_sub(1));
    let mut jac = DMatrix::zeros(rows, 5 * n);
    let sqrt_v = weights.v_diag.map(f64::sqrt);
    let sqrt_w = weights.w_diag.map(f64::sqrt);
    for k in 0..n {
        let state = stage_state(v, k);
        if let Ok(h_q) = kinematics::measurement_jacobian(state.shape(s)) {
            for (row_offset, weight) in [(0, sqrt_v.x), (1, sqrt_v.y)] {
                for col_offset in 0..2 {
                    jac[(2 * k + row_offset, 5 * k + 3 + col_offset)] =
                        -weight * RAD_TO_DEG * h_q[(row_offset, col_offset)];
                }
            }
        }
    }
    for (k, u) in inputs.iter().enumerate() {
        let state = stage_state(v, k);
        let row = 2 * n + 5 * k;
        // d(residual)/d(x_{k+1}) = diag(sqrt_w)
        for i in 0..5 {
            jac[(row + i, 5 * (k + 1) + i)] = sqrt_w[i];
        }
        // d(residual)/d(x_k) = -diag(sqrt_w) * [I3, dt*G; 0, I2] with
        // G = d(J(q) u)/dq by central differences.
        for i in 0..3 {
            jac[(row + i, 5 * k + i)] = -sqrt_w[i];
        }
        for i in 0..2 {
            jac[(row + 3 + i, 5 * k + 3 + i)] = -sqrt_w[3 + i];
        }
        let rates = Vector2::new(u.theta_dot, u.phi_dot);
        let h = PROCESS_FD_STEP;
        for (col, (dtheta, dphi)) in [(0, (h, 0.0)), (1, (0.0, h))] {
            let plus = kinematics::position_jacobian(ShapeParams::new(
                state.theta + dtheta,
                state.phi + dphi,
                s,
            ));
            let minus = kinematics::position_jacobian(ShapeParams::new(
                state.theta - dtheta,
                state.phi - dphi,
                s,
            ));
            if let (Ok(jp), Ok(jm)) = (plus, minus) {
                let g_col = (jp * rates - jm * rates) / (2.0 * h);
                for i in 0..3 {
                    jac[(row + i, 5 * k + 3 + col)] = -sqrt_w[i] * dt.seconds() * g_col[i];
                }
            }
        }
    }
    jac
}

/// Lowers a window into a generic box-constrained least-squares problem.
pub fn build_problem(problem: &MheProblem) -> NlsProblem {
    let n = problem.horizon();
    let mut lower = DVector::zeros(5 * n);
    let mut upper = DVector::zeros(5 * n);
    for k in 0..n {
        lower.rows_mut(5 * k, 5).copy_from(&problem.bounds.lower_vector());
        upper.rows_mut(5 * k, 5).copy_from(&problem.bounds.upper_vector());
    }
    let measurements = problem.measurements.clone();
    let inputs = problem.inputs.clone();
    let jac_inputs = problem.inputs.clone();
    let dt = problem.dt;
    let s = problem.robot_length;
    let weights = problem.weights;
    NlsProblem::new(lower, upper, move |v| {
        window_residual(v, &measurements, &inputs, dt, s, &weights)
    })
    .expect("window bounds are validated")
    .with_jacobian(move |v| window_jacobian(v, &jac_inputs, n, dt, s, &weights))
}

/// Solves one window and reports the per-stage states plus the window cost
/// (sum of squared weighted residuals).
pub fn estimate_window(problem: &MheProblem, settings: &SolverSettings) -> Result<MheEstimate> {
    let nls = build_problem(problem);
    let report = solver::solve(&nls, &problem.guess_vector(), settings)?;
    Ok(MheEstimate {
        states: unstack_states(&report.solution),
        cost: 2.0 * report.final_cost,
        report,
    })
}

/// Stage guess from one measurement: invert the (clamped) angles and place
/// the position by forward kinematics.
fn state_from_measurement(z: &Measurement, s: f64) -> Result<RobotState> {
    let (theta, phi) = kinematics::invert_measurement(z.clamped_principal())?;
    RobotState::from_shape(ShapeParams::new(theta, phi, s))
}

/// Sliding-horizon output.
#[derive(Debug, Clone)]
pub struct SlidingResult {
    /// One estimate per solve, for samples `N-1 ..= M-2`.
    pub estimates: Vec<RobotState>,
    /// Index of the first estimated sample (`N - 1`).
    pub first_sample: usize,
    /// Wall time of each window solve, seconds.
    pub solve_seconds: Vec<f64>,
    /// Reported cost of each window solve.
    pub costs: Vec<f64>,
}

/// Runs the sliding-window loop over `M > N` measurements.
///
/// Window `k` covers samples `k ..= k+N-1` and emits its final stage as the
/// estimate for sample `k+N-1`; exactly `M - N` solves are performed and the
/// first `N - 1` samples get no estimate. Each solve is warm-started from the
/// previous solution shifted by one stage with its last state repeated
/// (positions re-derived kinematically, see the module docs); the first
/// window starts from per-stage measurement inversion.
pub fn run_sliding(measurements: &[Measurement], cfg: &EstimatorConfig) -> Result<SlidingResult> {
    run_sliding_impl(measurements, cfg, true)
}

fn run_sliding_impl(
    measurements: &[Measurement],
    cfg: &EstimatorConfig,
    warm_start: bool,
) -> Result<SlidingResult> {
    cfg.validate()?;
    let total = measurements.len();
    let n = cfg.horizon;
    if total <= n {
        return Err(Error::invalid(format!(
            "sliding estimation needs more samples than the horizon ({total} <= {n})"
        )));
    }
    let dt = SampleTime::new(cfg.sample_time)?;
    let filtered = motion::smooth_measurements(measurements, cfg.input_filter_window);
    let all_inputs = motion::reconstruct_inputs(&filtered, dt)?;
    let s = cfg.robot_length;

    let mut estimates = Vec::with_capacity(total - n);
    let mut solve_seconds = Vec::with_capacity(total - n);
    let mut costs = Vec::with_capacity(total - n);
    let mut previous: Option<Vec<RobotState>> = None;

    for k in 0..total - n {
        let window = measurements[k..k + n].to_vec();
        let inputs = all_inputs[k..k + n - 1].to_vec();
        let guess = match previous.as_ref().filter(|_| warm_start) {
            Some(prev) => {
                // Shift by one stage, repeat the last state, rebuild positions
                // from the shifted shapes.
                let last = prev.last().expect("previous solution is nonempty");
                let mut shapes: Vec<(f64, f64)> =
                    prev.iter().skip(1).map(|x| (x.theta, x.phi)).collect();
                shapes.push((last.theta, last.phi));
                shapes
                    .into_iter()
                    .map(|(theta, phi)| RobotState::from_shape(ShapeParams::new(theta, phi, s)))
                    .collect::<Result<Vec<_>>>()?
            }
            None => window
                .iter()
                .map(|z| state_from_measurement(z, s))
                .collect::<Result<Vec<_>>>()?,
        };
        let problem = MheProblem::new(window, inputs, guess, cfg)?;
        let estimate = estimate_window(&problem, &cfg.solver)?;
        let last = estimate.states[n - 1];
        estimates.push(RobotState {
            position: kinematics::forward_position(last.shape(s))?,
            ..last
        });
        solve_seconds.push(estimate.report.wall_seconds);
        costs.push(estimate.cost);
        previous = Some(estimate.states);
    }

    Ok(SlidingResult { estimates, first_sample: n - 1, solve_seconds, costs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{forward_position, measurement_map};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn config(horizon: usize) -> EstimatorConfig {
        EstimatorConfig { horizon, ..EstimatorConfig::default() }
    }

    /// Rolls the motion model forward so the truth is an exact zero-residual
    /// point of the window problem.
    fn simulated_window(
        n: usize,
        cfg: &EstimatorConfig,
        u: VelocityInput,
    ) -> (Vec<RobotState>, Vec<Measurement>, Vec<VelocityInput>) {
        let dt = SampleTime::new(cfg.sample_time).unwrap();
        let s = cfg.robot_length;
        let mut states =
            vec![RobotState::from_shape(ShapeParams::new(0.4, 0.6, s)).unwrap()];
        for _ in 1..n {
            let next = motion::step(states.last().unwrap(), u, dt, s).unwrap();
            states.push(next);
        }
        let measurements =
            states.iter().map(|x| measurement_map(x.shape(s)).unwrap()).collect();
        (states, measurements, vec![u; n - 1])
    }

    #[test]
    fn residual_dimensions_match_window_structure() {
        let cfg = config(1);
        let z = vec![Measurement::new(0.1, 0.2)];
        let guess = vec![RobotState::from_shape(ShapeParams::new(0.3, 0.0, 1.0)).unwrap()];
        let problem = MheProblem::new(z, vec![], guess, &cfg).unwrap();
        let nls = build_problem(&problem);
        assert_eq!(nls.dim(), 5);
        assert_eq!(nls.residual(&problem.guess_vector()).len(), 2);

        let cfg = config(30);
        let (states, measurements, inputs) =
            simulated_window(30, &cfg, VelocityInput::new(0.05, 0.02));
        let problem = MheProblem::new(measurements, inputs, states, &cfg).unwrap();
        let nls = build_problem(&problem);
        assert_eq!(nls.dim(), 150);
        assert_eq!(nls.residual(&problem.guess_vector()).len(), 2 * 30 + 5 * 29);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let cfg = config(3);
        let z = vec![Measurement::new(0.0, 0.1); 3];
        let guess = vec![RobotState::from_shape(ShapeParams::new(0.1, 0.0, 1.0)).unwrap(); 3];
        assert!(MheProblem::new(z.clone(), vec![], guess.clone(), &cfg).is_err());
        assert!(MheProblem::new(z, vec![VelocityInput::zero(); 2], guess[..2].to_vec(), &cfg)
            .is_err());
    }

    #[test]
    fn noiseless_consistent_window_has_negligible_cost() {
        let cfg = config(12);
        let (states, measurements, inputs) =
            simulated_window(12, &cfg, VelocityInput::new(0.08, -0.05));
        let problem =
            MheProblem::new(measurements, inputs, states.clone(), &cfg).unwrap();
        let estimate = estimate_window(&problem, &cfg.solver).unwrap();
        assert!(estimate.cost < 1e-12, "cost {}", estimate.cost);
        for (found, expected) in estimate.states.iter().zip(&states) {
            assert!((found.position - expected.position).norm() < 1e-6);
            assert!((found.theta - expected.theta).abs() < 1e-6);
        }
    }

    #[test]
    fn supplied_jacobian_matches_finite_differences() {
        let cfg = config(4);
        let (states, measurements, inputs) =
            simulated_window(4, &cfg, VelocityInput::new(0.3, 0.2));
        let problem = MheProblem::new(measurements.clone(), inputs.clone(), states, &cfg).unwrap();
        let with_jac = build_problem(&problem);
        let dt = problem.dt;
        let weights = problem.weights;
        let fd_only = NlsProblem::new(
            with_jac.lower().clone(),
            with_jac.upper().clone(),
            move |v| window_residual(v, &measurements, &inputs, dt, 1.0, &weights),
        )
        .unwrap();
        let mut v = problem.guess_vector();
        for (i, delta) in [(3, 0.05), (8, -0.1), (14, 0.2)] {
            v[i] += delta;
        }
        let supplied = with_jac.jacobian(&v);
        let fd = fd_only.jacobian(&v);
        let rel = (&supplied - &fd).amax() / fd.amax();
        assert!(rel < 1e-4, "jacobian mismatch {rel}");
    }

    #[test]
    fn zero_measurements_zero_inputs_settle_straight() {
        let cfg = config(5);
        let z = vec![Measurement::new(0.0, 0.0); 5];
        let inputs = vec![VelocityInput::zero(); 4];
        let guess: Vec<RobotState> =
            z.iter().map(|m| state_from_measurement(m, 1.0).unwrap()).collect();
        let problem = MheProblem::new(z, inputs, guess, &cfg).unwrap();
        let estimate = estimate_window(&problem, &cfg.solver).unwrap();
        for state in estimate.states {
            assert_abs_diff_eq!(state.theta, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(state.phi, 0.0, epsilon = 1e-9);
            assert!((state.position - nalgebra::Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn saturating_window_clamps_theta_exactly() {
        // Planar data whose pitch runs past pi/2: feasible estimates must sit
        // on the bound at the saturated stages.
        let cfg = config(8);
        let dt = cfg.sample_time;
        let s = cfg.robot_length;
        let phi = FRAC_PI_2;
        let thetas: Vec<f64> = (0..8).map(|k| 1.35 + 0.06 * k as f64 * (0.05 / dt)).collect();
        let measurements: Vec<Measurement> = thetas
            .iter()
            .map(|&t| measurement_map(ShapeParams::new(t, phi, s)).unwrap())
            .collect();
        let dt_s = SampleTime::new(dt).unwrap();
        let inputs = motion::reconstruct_inputs(&measurements, dt_s).unwrap();
        let guess: Vec<RobotState> =
            measurements.iter().map(|z| state_from_measurement(z, s).unwrap()).collect();
        let problem = MheProblem::new(measurements.clone(), inputs, guess, &cfg).unwrap();
        let estimate = estimate_window(&problem, &cfg.solver).unwrap();
        for (state, &theta_true) in estimate.states.iter().zip(&thetas) {
            assert!(state.theta <= FRAC_PI_2, "estimate above the bound");
            if theta_true > FRAC_PI_2 {
                assert!(FRAC_PI_2 - state.theta < 1e-6, "saturated stage at {}", state.theta);
            }
        }
    }

    #[test]
    fn reported_cost_matches_independent_recompute() {
        let cfg = config(10);
        let (states, measurements, inputs) =
            simulated_window(10, &cfg, VelocityInput::new(0.2, 0.1));
        let noisy: Vec<Measurement> = measurements
            .iter()
            .enumerate()
            .map(|(i, z)| Measurement::new(z.gamma + 0.01 * ((i % 3) as f64 - 1.0), z.beta - 0.005))
            .collect();
        let problem = MheProblem::new(noisy.clone(), inputs.clone(), states, &cfg).unwrap();
        let estimate = estimate_window(&problem, &cfg.solver).unwrap();

        // Plain loop recompute, separate from the solver residual plumbing.
        let mut total = 0.0;
        for (k, z) in noisy.iter().enumerate() {
            let h = measurement_map(estimate.states[k].shape(1.0)).unwrap();
            total += cfg.v_diag[0] * (RAD_TO_DEG * (z.gamma - h.gamma)).powi(2);
            total += cfg.v_diag[1] * (RAD_TO_DEG * (z.beta - h.beta)).powi(2);
        }
        for (k, u) in inputs.iter().enumerate() {
            let pred = motion::step(
                &estimate.states[k],
                *u,
                SampleTime::new(cfg.sample_time).unwrap(),
                1.0,
            )
            .unwrap();
            let diff = estimate.states[k + 1].to_vector() - pred.to_vector();
            for i in 0..5 {
                total += cfg.w_diag[i] * diff[i] * diff[i];
            }
        }
        assert!((estimate.cost - total).abs() <= 1e-10 * total.max(1.0));
    }

    #[test]
    fn sliding_counts_and_bounds() {
        let cfg = config(6);
        let s = cfg.robot_length;
        let measurements: Vec<Measurement> = (0..20)
            .map(|k| {
                let t = k as f64 * cfg.sample_time;
                measurement_map(ShapeParams::new(0.5 + 0.1 * (t).sin(), 0.7, s)).unwrap()
            })
            .collect();
        let result = run_sliding(&measurements, &cfg).unwrap();
        assert_eq!(result.estimates.len(), 20 - 6);
        assert_eq!(result.first_sample, 5);
        let bounds = cfg.bounds();
        for estimate in &result.estimates {
            let x = estimate.to_vector();
            for i in 0..5 {
                assert!(x[i] >= bounds.lower[i] && x[i] <= bounds.upper[i]);
            }
        }

        // Boundary: exactly one solve.
        let short = &measurements[..7];
        assert_eq!(run_sliding(short, &cfg).unwrap().estimates.len(), 1);
        // Too short: rejected.
        assert!(run_sliding(&measurements[..6], &cfg).is_err());
    }

    #[test]
    fn degenerate_horizon_of_one_still_slides() {
        let cfg = config(1);
        let measurements: Vec<Measurement> = (0..6)
            .map(|k| {
                measurement_map(ShapeParams::new(0.3 + 0.02 * k as f64, 0.4, 1.0)).unwrap()
            })
            .collect();
        let result = run_sliding(&measurements, &cfg).unwrap();
        assert_eq!(result.estimates.len(), 5);
        assert_eq!(result.first_sample, 0);
        for (k, estimate) in result.estimates.iter().enumerate() {
            assert!((estimate.theta - (0.3 + 0.02 * k as f64)).abs() < 1e-6);
        }
    }

    #[test]
    fn warm_start_content_does_not_change_noiseless_estimates() {
        let cfg = config(8);
        let s = cfg.robot_length;
        let measurements: Vec<Measurement> = (0..30)
            .map(|k| {
                let t = k as f64 * cfg.sample_time;
                measurement_map(ShapeParams::new(
                    0.6 + 0.15 * (0.9 * t).sin(),
                    0.5 + 0.1 * (0.7 * t).cos(),
                    s,
                ))
                .unwrap()
            })
            .collect();
        let warm = run_sliding_impl(&measurements, &cfg, true).unwrap();
        let cold = run_sliding_impl(&measurements, &cfg, false).unwrap();
        for (a, b) in warm.estimates.iter().zip(&cold.estimates) {
            assert!((a.to_vector() - b.to_vector()).amax() < 1e-6);
        }
    }

    #[test]
    fn noiseless_sliding_tracks_truth() {
        let cfg = config(10);
        let s = cfg.robot_length;
        let shapes: Vec<ShapeParams> = (0..60)
            .map(|k| {
                let t = k as f64 * cfg.sample_time;
                ShapeParams::new(0.6 + 0.2 * (0.8 * t).sin(), 0.4 + 0.3 * (0.6 * t).sin(), s)
            })
            .collect();
        let measurements: Vec<Measurement> =
            shapes.iter().map(|&q| measurement_map(q).unwrap()).collect();
        let result = run_sliding(&measurements, &cfg).unwrap();
        for (i, estimate) in result.estimates.iter().enumerate() {
            let truth = &shapes[result.first_sample + i];
            let p_true = forward_position(*truth).unwrap();
            assert!((estimate.theta - truth.theta).abs() < 1e-3);
            assert!((estimate.position - p_true).norm() < 1e-3 * s);
        }
    }

    #[test]
    fn more_information_does_not_hurt_noiseless_accuracy() {
        let s = 1.0;
        let shapes: Vec<ShapeParams> = (0..80)
            .map(|k| {
                let t = k as f64 * 0.05;
                ShapeParams::new(0.5 + 0.15 * (0.7 * t).sin(), 0.8 + 0.1 * (0.5 * t).sin(), s)
            })
            .collect();
        let measurements: Vec<Measurement> =
            shapes.iter().map(|&q| measurement_map(q).unwrap()).collect();
        let error_for = |n: usize| -> f64 {
            let cfg = config(n);
            let result = run_sliding(&measurements, &cfg).unwrap();
            result
                .estimates
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let truth = forward_position(shapes[result.first_sample + i]).unwrap();
                    (e.position - truth).norm()
                })
                .fold(0.0, f64::max)
        };
        let small = error_for(5);
        let large = error_for(30);
        assert!(large <= small + 1e-6, "N=30 error {large} vs N=5 error {small}");
    }
}
