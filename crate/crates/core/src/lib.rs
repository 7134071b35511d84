//! State estimation for one-section constant-curvature continuum robots.
//!
//! A tip-mounted IMU senses roll and pitch; the estimators recover the full
//! state `[x, y, z, theta, phi]` from those two angles. The crate provides:
//!
//! - [`kinematics`]: closed-form constant-curvature geometry (tip position,
//!   rotation, measurement map and its inverse, position Jacobian);
//! - [`motion`]: the forward-Euler motion model and input reconstruction from
//!   consecutive measurements;
//! - [`solver`]: a projected Levenberg-Marquardt solver for box-constrained
//!   nonlinear least squares;
//! - [`mhe`]: the sliding-horizon estimator, which enforces the workspace box
//!   exactly;
//! - [`ekf`]: an extended Kalman filter baseline on the same models;
//! - [`experiments`]: synthetic trajectories, seeded noise, SRMSE, the
//!   Monte-Carlo noise study and the horizon sweep;
//! - [`config`] / [`report`]: run configuration and result documents for the
//!   `continuum-mhe` command-line tool.

pub mod cli;
pub mod config;
pub mod ekf;
pub mod error;
pub mod experiments;
pub mod kinematics;
pub mod mhe;
pub mod motion;
pub mod report;
pub mod solver;

pub use config::{AppConfig, EstimatorConfig};
pub use error::{Error, Result};
pub use kinematics::{Measurement, RobotState, ShapeParams};
pub use motion::{SampleTime, VelocityInput};
