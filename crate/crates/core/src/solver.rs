//! Box-constrained nonlinear least squares.
//!
//! A damped Gauss-Newton (Levenberg-Marquardt) loop with projection of every
//! trial point onto the bound box and acceptance by cost decrease. Each outer
//! iteration first attempts an (almost) undamped Gauss-Newton step, which
//! makes linear problems converge in a single iteration; if the step is
//! rejected the Levenberg ladder takes over with the usual x10-on-rejection,
//! /10-on-acceptance schedule. The solver has no randomized internals, so
//! identical inputs produce bit-identical solutions.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative ridge used for the optimistic Gauss-Newton trial. Large enough to
/// keep exactly-singular normal equations (e.g. a translation null space)
/// from producing wild steps, small enough that linear problems land on the
/// optimum to near machine precision.
const GN_RIDGE: f64 = 1e-10;

/// Minimum relative cost decrease for a trial to count as an improvement.
/// Guards against accepting float-noise "progress" forever near a minimum.
const MIN_RELATIVE_DECREASE: f64 = 1e-10;

type ResidualFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64>>;
type JacobianFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64>>;

/// A weighted least-squares problem `min 1/2 |r(v)|^2` over a bound box.
pub struct NlsProblem {
    dim: usize,
    lower: DVector<f64>,
    upper: DVector<f64>,
    residual_fn: ResidualFn,
    jacobian_fn: Option<JacobianFn>,
}

impl NlsProblem {
    /// Creates a problem with the given box. The residual must return finite
    /// values everywhere inside the box; its Jacobian defaults to central
    /// finite differences unless supplied via [`NlsProblem::with_jacobian`].
    pub fn new(
        lower: DVector<f64>,
        upper: DVector<f64>,
        residual: impl Fn(&DVector<f64>) -> DVector<f64> + 'static,
    ) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::invalid("bound vectors must have equal length"));
        }
        if lower.iter().zip(upper.iter()).any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::invalid("lower bounds must not exceed upper bounds"));
        }
        Ok(NlsProblem {
            dim: lower.len(),
            lower,
            upper,
            residual_fn: Box::new(residual),
            jacobian_fn: None,
        })
    }

    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(&DVector<f64>) -> DMatrix<f64> + 'static,
    ) -> Self {
        self.jacobian_fn = Some(Box::new(jacobian));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.residual_fn)(v)
    }

    /// Supplied Jacobian, or central finite differences with step
    /// `1e-6 * max(1, |v_j|)`.
    pub fn jacobian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        if let Some(jac) = &self.jacobian_fn {
            return jac(v);
        }
        let mut columns: Vec<DVector<f64>> = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let h = 1e-6 * v[j].abs().max(1.0);
            let mut plus = v.clone();
            let mut minus = v.clone();
            plus[j] += h;
            minus[j] -= h;
            columns.push((self.residual(&plus) - self.residual(&minus)) / (2.0 * h));
        }
        DMatrix::from_columns(&columns)
    }

    pub fn clamp(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |i, _| v[i].clamp(self.lower[i], self.upper[i]))
    }
}

/// Levenberg-Marquardt knobs. All fields must be positive.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Infinity-norm threshold on the projected gradient.
    pub grad_tol: f64,
    /// Minimum norm of a projected trial step.
    pub step_tol: f64,
    /// Initial Levenberg damping.
    pub damping_init: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iterations: 100,
            grad_tol: 1e-8,
            step_tol: 1e-12,
            damping_init: 1e-3,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        for (name, value) in [
            ("grad_tol", self.grad_tol),
            ("step_tol", self.step_tol),
            ("damping_init", self.damping_init),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    StepTooSmall,
}

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Final iterate; satisfies the box exactly.
    pub solution: DVector<f64>,
    /// `1/2 |r|^2` at the solution.
    pub final_cost: f64,
    /// Accepted steps taken.
    pub iterations: usize,
    pub termination: Termination,
    pub wall_seconds: f64,
    /// Cost after each accepted step, starting with the clamped initial point.
    pub cost_trace: Vec<f64>,
}

/// Internal objective: `1/2 |r(v)|^2`.
pub fn cost(problem: &NlsProblem, v: &DVector<f64>) -> f64 {
    0.5 * problem.residual(v).norm_squared()
}

fn finite_or_err(r: &DVector<f64>, iterate: &DVector<f64>) -> Result<()> {
    if r.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteResidual { iterate: iterate.iter().copied().collect() })
    }
}

/// Infinity norm of the gradient with KKT-satisfied bound components zeroed:
/// at an active lower bound only a negative gradient counts (the descent
/// direction must point into the box), and symmetrically at an upper bound.
fn projected_gradient_inf(
    grad: &DVector<f64>,
    v: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let g = grad[i];
        let blocked_low = v[i] <= lower[i] && g > 0.0;
        let blocked_high = v[i] >= upper[i] && g < 0.0;
        if !(blocked_low || blocked_high) {
            worst = worst.max(g.abs());
        }
    }
    worst
}

/// Minimizes `1/2 |r(v)|^2` over the problem's box starting from `v0`
/// (clamped into the box before iterating).
pub fn solve(
    problem: &NlsProblem,
    v0: &DVector<f64>,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    settings.validate()?;
    if v0.len() != problem.dim() {
        return Err(Error::invalid(format!(
            "initial point has dimension {}, problem has {}",
            v0.len(),
            problem.dim()
        )));
    }
    let start = Instant::now();
    let n = problem.dim();
    let mut v = problem.clamp(v0);
    let mut r = problem.residual(&v);
    finite_or_err(&r, &v)?;
    let mut current_cost = 0.5 * r.norm_squared();
    let mut cost_trace = vec![current_cost];
    let mut lambda = settings.damping_init;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    'outer: while iterations < settings.max_iterations {
        let jac = problem.jacobian(&v);
        if jac.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteResidual { iterate: v.iter().copied().collect() });
        }
        let grad = jac.transpose() * &r;
        if projected_gradient_inf(&grad, &v, problem.lower(), problem.upper()) < settings.grad_tol {
            termination = Termination::Converged;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let scale = (jtj.trace() / n as f64).max(f64::MIN_POSITIVE);

        let mut gauss_newton_trial = true;
        loop {
            let damping = if gauss_newton_trial { GN_RIDGE * scale } else { lambda };
            let mut system = jtj.clone();
            for i in 0..n {
                system[(i, i)] += damping;
            }
            // A non-finite system (e.g. a finite-difference Jacobian evaluated
            // where the residual blows up) can never factor; bail out instead
            // of escalating the damping forever.
            if lambda > 1e120 {
                termination = Termination::StepTooSmall;
                break 'outer;
            }
            let delta = match system.cholesky() {
                Some(factor) => factor.solve(&(-&grad)),
                None => {
                    if gauss_newton_trial {
                        gauss_newton_trial = false;
                    } else {
                        lambda *= 10.0;
                    }
                    continue;
                }
            };
            if delta.iter().any(|x| !x.is_finite()) {
                if gauss_newton_trial {
                    gauss_newton_trial = false;
                } else {
                    lambda *= 10.0;
                }
                continue;
            }
            let trial = problem.clamp(&(&v + delta));
            let step_norm = (&trial - &v).norm();
            if step_norm < settings.step_tol {
                termination = Termination::StepTooSmall;
                break 'outer;
            }
            let trial_residual = problem.residual(&trial);
            finite_or_err(&trial_residual, &trial)?;
            let trial_cost = 0.5 * trial_residual.norm_squared();
            if trial_cost < current_cost * (1.0 - MIN_RELATIVE_DECREASE) {
                v = trial;
                r = trial_residual;
                current_cost = trial_cost;
                cost_trace.push(current_cost);
                iterations += 1;
                if !gauss_newton_trial {
                    lambda = (lambda / 10.0).max(1e-15);
                }
                break;
            }
            if gauss_newton_trial {
                gauss_newton_trial = false;
            } else {
                lambda *= 10.0;
            }
        }
    }

    Ok(SolveReport {
        solution: v,
        final_cost: current_cost,
        iterations,
        termination,
        wall_seconds: start.elapsed().as_secs_f64(),
        cost_trace,
    })
}
