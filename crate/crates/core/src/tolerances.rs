//! Numerical thresholds shared across the engine.

use serde::{Deserialize, Serialize};

/// Smallest admissible singular value of the chart Jacobian.
pub const RANK_TOL: f64 = 1e-8;
/// Smallest admissible scale-free determinant `det g / (tr g / n)^n`.
pub const DET_TOL: f64 = 1e-12;
/// Relative eigenvalue clustering threshold, scaled by `1 + max|k|`.
pub const EPS_CLUSTER_REL: f64 = 1e-6;
/// Profile ODE pole guard on `psi` and `phi`.
pub const POLE_TOL: f64 = 1e-6;
/// Minimal distance of a profile from the poles before a chart is built.
pub const POLE_MARGIN: f64 = 1e-3;
pub const GRAD_FLOOR: f64 = 1e-7;
pub const S1_FLOOR: f64 = 1e-7;
pub const KAPPA_FLOOR: f64 = 1e-8;
pub const LAMBDA_TOL: f64 = 1e-3;
/// Distance kept between grid nodes and the chart box boundary.
pub const GRID_MARGIN: f64 = 0.1;
/// Step for the Laplace-Beltrami stencil.
pub const H_LB: f64 = 1e-3;
/// Step for differentiating the principal frame.
pub const H_FRAME: f64 = 1e-3;
/// Step for the jet consistency check and the sampled-chart fallback.
pub const H_FD: f64 = 1e-4;

/// Snapshot of the thresholds, embedded in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    pub rank_tol: f64,
    pub det_tol: f64,
    pub eps_cluster_rel: f64,
    pub pole_tol: f64,
    pub pole_margin: f64,
    pub grad_floor: f64,
    pub s1_floor: f64,
    pub kappa_floor: f64,
    pub lambda_tol: f64,
    pub grid_margin: f64,
    pub h_lb: f64,
    pub h_frame: f64,
    pub h_fd: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            rank_tol: RANK_TOL,
            det_tol: DET_TOL,
            eps_cluster_rel: EPS_CLUSTER_REL,
            pole_tol: POLE_TOL,
            pole_margin: POLE_MARGIN,
            grad_floor: GRAD_FLOOR,
            s1_floor: S1_FLOOR,
            kappa_floor: KAPPA_FLOOR,
            lambda_tol: LAMBDA_TOL,
            grid_margin: GRID_MARGIN,
            h_lb: H_LB,
            h_frame: H_FRAME,
            h_fd: H_FD,
        }
    }
}
