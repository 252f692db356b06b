use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("parameter point {point:?} is outside the chart domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("chart Jacobian is rank deficient (smallest singular value {sigma_min:.3e})")]
    RankDeficient { sigma_min: f64 },
    #[error("induced metric is degenerate (det {det:.3e})")]
    Degenerate { det: f64 },
    #[error("finite-difference stencil leaves the chart domain near {point:?}")]
    NearPole { point: Vec<f64> },
    #[error("mean curvature vanishes (|s1| = {s1:.3e}) at {point:?}")]
    MeanCurvatureVanishes { s1: f64, point: Vec<f64> },
    #[error("gradient of the mean curvature vanishes (|grad s1| = {norm:.3e}) at {point:?}")]
    GradientVanishes { norm: f64, point: Vec<f64> },
    #[error("principal frame is unstable: {reason}")]
    UnstableFrame { reason: String },
    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("traced curve left the chart domain after {steps} steps")]
    CurveLeftDomain { steps: usize },
    #[error("profile state hits a coordinate pole (psi = {psi:.3e}, phi = {phi:.3e})")]
    PoleHit { psi: f64, phi: f64 },
    #[error("invalid initial data: {0}")]
    BadInitial(String),
    #[error("step size collapsed to {step:.3e} at s = {s}")]
    StepCollapse { s: f64, step: f64 },
    #[error("profile family {found} does not match requested {expected}")]
    FamilyMismatch { expected: String, found: String },
    #[error("profile comes within {min:.3e} of a pole (margin {margin:.3e})")]
    PoleMargin { min: f64, margin: f64 },
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
