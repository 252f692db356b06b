//! Profile-curve ODEs of the two classified families and their integration.
//!
//! The unit-speed profile `(psi(s), phi(s))` is written through its turning
//! angle: `psi' = cos(theta)`, `phi' = sin(theta)`. With this convention
//! `phi' psi'' - phi'' psi' = -theta'`, so the curvature conditions become
//! first-order equations for `theta`:
//!
//! * rotational family: `theta' = -(1/3) (p sin(theta)/psi - q cos(theta)/phi)`
//! * cylinder family:   `theta' = -(p/3) sin(theta)/psi`

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::report::ResidualReport;
use crate::tolerances::POLE_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Rotational,
    Cylinder,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Rotational => "rotational",
            Family::Cylinder => "cylinder",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub psi: f64,
    pub phi: f64,
    pub theta: f64,
}

impl ProfileState {
    pub fn new(psi: f64, phi: f64, theta: f64) -> Self {
        Self { psi, phi, theta }
    }

    fn to_array(self) -> [f64; 3] {
        [self.psi, self.phi, self.theta]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self { psi: a[0], phi: a[1], theta: a[2] }
    }
}

/// Right-hand side for the generalized rotational family.
pub fn rotational_rhs(state: ProfileState, p: usize, q: usize) -> Result<[f64; 3]> {
    let ProfileState { psi, phi, theta } = state;
    if !(psi > POLE_TOL && phi > POLE_TOL) {
        return Err(GeomError::PoleHit { psi, phi });
    }
    let (s, c) = theta.sin_cos();
    let dtheta = -(p as f64 * s / psi - q as f64 * c / phi) / 3.0;
    Ok([c, s, dtheta])
}

/// Right-hand side for the generalized cylinder family.
pub fn cylinder_rhs(state: ProfileState, p: usize) -> Result<[f64; 3]> {
    let ProfileState { psi, phi, theta } = state;
    if !(psi > POLE_TOL) {
        return Err(GeomError::PoleHit { psi, phi });
    }
    let (s, c) = theta.sin_cos();
    Ok([c, s, -(p as f64) * s / (3.0 * psi)])
}

/// The profile ODE of one family with fixed block sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileOde {
    pub family: Family,
    pub p: usize,
    pub q: usize,
}

/// `psi` and `phi` with their first three arclength derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileDerivatives {
    pub psi: [f64; 4],
    pub phi: [f64; 4],
    pub theta: f64,
    pub dtheta: f64,
}

impl ProfileOde {
    pub fn new(family: Family, p: usize, q: usize) -> Self {
        Self { family, p, q }
    }

    pub fn rhs(&self, state: ProfileState) -> Result<[f64; 3]> {
        match self.family {
            Family::Rotational => rotational_rhs(state, self.p, self.q),
            Family::Cylinder => cylinder_rhs(state, self.p),
        }
    }

    /// Smallest distance from the singular set of this family's equation.
    pub fn pole_distance(&self, state: ProfileState) -> f64 {
        match self.family {
            Family::Rotational => state.psi.min(state.phi),
            Family::Cylinder => state.psi,
        }
    }

    /// `theta'` and `theta''` from the equation and its chain-rule derivative.
    fn theta_derivatives(&self, st: ProfileState) -> Result<(f64, f64)> {
        let f = self.rhs(st)?[2];
        let (s, c) = st.theta.sin_cos();
        let p = self.p as f64;
        let q = self.q as f64;
        let (f_psi, f_phi, f_theta) = match self.family {
            Family::Rotational => (
                p * s / (3.0 * st.psi * st.psi),
                -q * c / (3.0 * st.phi * st.phi),
                -(p * c / st.psi + q * s / st.phi) / 3.0,
            ),
            Family::Cylinder => (p * s / (3.0 * st.psi * st.psi), 0.0, -p * c / (3.0 * st.psi)),
        };
        Ok((f, f_psi * c + f_phi * s + f_theta * f))
    }

    pub fn derivatives(&self, st: ProfileState) -> Result<ProfileDerivatives> {
        let (d1, d2) = self.theta_derivatives(st)?;
        let (s, c) = st.theta.sin_cos();
        Ok(ProfileDerivatives {
            psi: [st.psi, c, -s * d1, -c * d1 * d1 - s * d2],
            phi: [st.phi, s, c * d1, -s * d1 * d1 + c * d2],
            theta: st.theta,
            dtheta: d1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub s: f64,
    pub psi: f64,
    pub phi: f64,
    pub theta: f64,
}

impl ProfileSample {
    pub fn state(&self) -> ProfileState {
        ProfileState::new(self.psi, self.phi, self.theta)
    }
}

/// Arclength-sampled unit-speed profile curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub family: Family,
    pub p: usize,
    pub q: usize,
    pub local_tol: f64,
    pub samples: Vec<ProfileSample>,
    /// Integration stopped before `s_max` because the solution approached a pole.
    pub halted_early: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl ProfileCurve {
    /// Wraps externally produced samples (e.g. test curves).
    pub fn from_samples(family: Family, p: usize, q: usize, samples: Vec<ProfileSample>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].s > w[0].s)) {
            return Err(GeomError::BadParams("sample arclengths must increase strictly".into()));
        }
        if samples.is_empty() {
            return Err(GeomError::InsufficientSamples { needed: 1, got: 0 });
        }
        Ok(Self {
            family,
            p,
            q,
            local_tol: 0.0,
            samples,
            halted_early: false,
            accepted_steps: 0,
            rejected_steps: 0,
        })
    }

    pub fn ode(&self) -> ProfileOde {
        ProfileOde::new(self.family, self.p, self.q)
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.samples[0].s, self.samples[self.samples.len() - 1].s)
    }

    /// Signed curvature `kappa = phi' psi'' - phi'' psi' = -theta'` from the equation.
    pub fn kappa(&self, sample: &ProfileSample) -> Result<f64> {
        Ok(-self.ode().rhs(sample.state())?[2])
    }

    /// State at arbitrary `s`, integrated from the first sample by classical
    /// RK4 with a step count fixed per curve (steps of at most `5e-4` over the
    /// full range). The result is a smooth function of `s`.
    pub fn state_at(&self, s: f64) -> Result<ProfileState> {
        let start = &self.samples[0];
        let ds = s - start.s;
        if ds == 0.0 {
            return Ok(start.state());
        }
        let (lo, hi) = self.s_range();
        let nsub = ((hi - lo).max(ds.abs()) / STATE_STEP).ceil().max(1.0) as usize;
        let h = ds / nsub as f64;
        let ode = self.ode();
        let mut y = start.state().to_array();
        for _ in 0..nsub {
            y = rk4_step(&ode, y, h)?;
        }
        Ok(ProfileState::from_array(y))
    }

    pub fn derivatives_at(&self, s: f64) -> Result<ProfileDerivatives> {
        self.ode().derivatives(self.state_at(s)?)
    }

    /// Smallest pole distance over the samples.
    pub fn min_pole_distance(&self) -> f64 {
        let ode = self.ode();
        self.samples
            .iter()
            .map(|x| ode.pole_distance(x.state()))
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `s,psi,phi,theta,kappa`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,psi,phi,theta,kappa\n");
        for x in &self.samples {
            let kappa = self.kappa(x).unwrap_or(f64::NAN);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(x.s),
                fmt17(x.psi),
                fmt17(x.phi),
                fmt17(x.theta),
                fmt17(kappa)
            ));
        }
        out
    }
}

/// Fixed 17-significant-digit scientific formatting.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn rk4_step(ode: &ProfileOde, y: [f64; 3], h: f64) -> Result<[f64; 3]> {
    let f = |y: [f64; 3]| ode.rhs(ProfileState::from_array(y));
    let add = |y: [f64; 3], k: [f64; 3], a: f64| [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]];
    let k1 = f(y)?;
    let k2 = f(add(y, k1, 0.5 * h))?;
    let k3 = f(add(y, k2, 0.5 * h))?;
    let k4 = f(add(y, k3, h))?;
    Ok([
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ])
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MIN_STEP: f64 = 1e-12;
const MAX_STEPS: usize = 1_000_000;

struct StepOutcome {
    y_new: [f64; 3],
    err: f64,
}

fn dopri_step(ode: &ProfileOde, y: [f64; 3], h: f64, tol: f64) -> Result<StepOutcome> {
    let mut k = [[0.0; 3]; 7];
    for stage in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(stage) {
            let a = A[stage][j];
            if a != 0.0 {
                for d in 0..3 {
                    ys[d] += h * a * kj[d];
                }
            }
        }
        k[stage] = ode.rhs(ProfileState::from_array(ys))?;
        if stage == 6 {
            // FSAL: the last stage is evaluated at the 5th-order solution.
            let mut err_sq = 0.0;
            for d in 0..3 {
                let e: f64 = (0..7).map(|j| E[j] * k[j][d]).sum::<f64>() * h;
                let sc = tol + tol * y[d].abs().max(ys[d].abs());
                err_sq += (e / sc).powi(2);
            }
            return Ok(StepOutcome { y_new: ys, err: (err_sq / 3.0).sqrt() });
        }
    }
    unreachable!("seven stages always return")
}

/// Adaptive embedded Runge-Kutta 5(4) driver with PI step control.
///
/// Steps are clipped so every point of `checkpoints` (ascending, within
/// `(0, s_max]`) is hit exactly; the states there are returned.
struct Driver {
    ode: ProfileOde,
    tol: f64,
    accepted: usize,
    rejected: usize,
    step_sum: f64,
}

enum Stop {
    Finished,
    NearPole,
}

impl Driver {
    fn run(
        &mut self,
        initial: ProfileState,
        checkpoints: &[f64],
        mut on_checkpoint: impl FnMut(f64, ProfileState),
    ) -> Result<(Stop, f64, ProfileState)> {
        let mut s = 0.0;
        let mut y = initial.to_array();
        let s_end = *checkpoints.last().expect("at least one checkpoint");
        let mut h = (0.01_f64).min(s_end);
        let mut err_old: f64 = 1e-4;
        let mut next = 0;
        let mut pole_seen = false;
        let mut steps = 0;
        while next < checkpoints.len() {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(GeomError::StepCollapse { s, step: h });
            }
            let target = checkpoints[next];
            let clipped = h >= target - s;
            let trial = if clipped { target - s } else { h };
            match dopri_step(&self.ode, y, trial, self.tol) {
                Ok(out) if out.err <= 1.0 => {
                    let fac11 = out.err.max(1e-300).powf(0.2 - BETA * 0.75);
                    let fac = (fac11 / err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                    err_old = out.err.max(1e-4);
                    let proposal = trial / fac;
                    s = if clipped { target } else { s + trial };
                    y = out.y_new;
                    self.accepted += 1;
                    self.step_sum += trial;
                    if !clipped {
                        h = proposal;
                    } else {
                        h = h.max(proposal);
                        on_checkpoint(s, ProfileState::from_array(y));
                        next += 1;
                    }
                    let st = ProfileState::from_array(y);
                    if self.ode.pole_distance(st) < 10.0 * POLE_TOL {
                        return Ok((Stop::NearPole, s, st));
                    }
                }
                Ok(out) => {
                    self.rejected += 1;
                    let fac11 = out.err.powf(0.2 - BETA * 0.75);
                    h = trial / (fac11 / SAFETY).min(1.0 / FAC_MIN);
                }
                Err(GeomError::PoleHit { .. }) => {
                    self.rejected += 1;
                    pole_seen = true;
                    h = trial * 0.25;
                }
                Err(e) => return Err(e),
            }
            if h < MIN_STEP {
                let st = ProfileState::from_array(y);
                if pole_seen || self.ode.pole_distance(st) < 1e-3 {
                    return Ok((Stop::NearPole, s, st));
                }
                return Err(GeomError::StepCollapse { s, step: h });
            }
        }
        Ok((Stop::Finished, s, ProfileState::from_array(y)))
    }
}

fn validate(ode: &ProfileOde, initial: ProfileState, s_max: f64, local_tol: f64) -> Result<()> {
    if ode.p < 1 {
        return Err(GeomError::BadInitial("p must be >= 1".into()));
    }
    if ode.family == Family::Rotational && ode.q < 1 {
        return Err(GeomError::BadInitial("q must be >= 1 for the rotational family".into()));
    }
    if ![initial.psi, initial.phi, initial.theta, s_max].iter().all(|v| v.is_finite()) {
        return Err(GeomError::BadInitial("non-finite input".into()));
    }
    if !(s_max > 0.0) {
        return Err(GeomError::BadInitial(format!("s_max must be positive, got {s_max}")));
    }
    if !(1e-12..=1e-6).contains(&local_tol) {
        return Err(GeomError::BadInitial(format!("local_tol {local_tol:e} outside [1e-12, 1e-6]")));
    }
    if ode.pole_distance(initial) <= 10.0 * POLE_TOL {
        return Err(GeomError::BadInitial(format!(
            "initial state too close to a pole (psi = {}, phi = {})",
            initial.psi, initial.phi
        )));
    }
    Ok(())
}

pub const DEFAULT_SAMPLES: usize = 201;
const STATE_STEP: f64 = 5e-4;
const ROUNDOFF_FLOOR: f64 = 1e-13;

/// Integrates a profile with [`DEFAULT_SAMPLES`] uniformly spaced samples.
pub fn integrate_profile(
    family: Family,
    p: usize,
    q: usize,
    initial: ProfileState,
    s_max: f64,
    local_tol: f64,
) -> Result<ProfileCurve> {
    integrate_profile_sampled(family, p, q, initial, s_max, local_tol, DEFAULT_SAMPLES)
}

/// Integrates a profile and records `samples` (at least 200) uniformly
/// spaced states on `[0, s_max]`, each hit exactly by the stepper.
pub fn integrate_profile_sampled(
    family: Family,
    p: usize,
    q: usize,
    initial: ProfileState,
    s_max: f64,
    local_tol: f64,
    samples: usize,
) -> Result<ProfileCurve> {
    let ode = ProfileOde::new(family, p, q);
    validate(&ode, initial, s_max, local_tol)?;
    if samples < 200 {
        return Err(GeomError::BadParams(format!("need at least 200 samples, got {samples}")));
    }
    let checkpoints: Vec<f64> = (1..samples)
        .map(|k| if k == samples - 1 { s_max } else { s_max * k as f64 / (samples - 1) as f64 })
        .collect();
    let mut out = vec![ProfileSample { s: 0.0, psi: initial.psi, phi: initial.phi, theta: initial.theta }];
    let mut driver = Driver { ode, tol: local_tol, accepted: 0, rejected: 0, step_sum: 0.0 };
    let (stop, s_final, y_final) = driver.run(initial, &checkpoints, |s, st| {
        out.push(ProfileSample { s, psi: st.psi, phi: st.phi, theta: st.theta })
    })?;
    let halted_early = matches!(stop, Stop::NearPole);
    if halted_early && s_final > out.last().map(|x| x.s).unwrap_or(0.0) {
        out.push(ProfileSample { s: s_final, psi: y_final.psi, phi: y_final.phi, theta: y_final.theta });
    }
    Ok(ProfileCurve {
        family,
        p,
        q,
        local_tol,
        samples: out,
        halted_early,
        accepted_steps: driver.accepted,
        rejected_steps: driver.rejected,
    })
}

/// Endpoint of a purely adaptive run (no sample clipping).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointRun {
    pub state: ProfileState,
    pub accepted_steps: usize,
    pub mean_step: f64,
    pub halted_early: bool,
}

pub fn integrate_endpoint(
    ode: ProfileOde,
    initial: ProfileState,
    s_max: f64,
    local_tol: f64,
) -> Result<EndpointRun> {
    validate(&ode, initial, s_max, local_tol)?;
    let mut driver = Driver { ode, tol: local_tol, accepted: 0, rejected: 0, step_sum: 0.0 };
    let (stop, s_final, state) = driver.run(initial, &[s_max], |_, _| {})?;
    Ok(EndpointRun {
        state,
        accepted_steps: driver.accepted,
        mean_step: s_final / driver.accepted.max(1) as f64,
        halted_early: matches!(stop, Stop::NearPole),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub tolerances: Vec<f64>,
    pub mean_steps: Vec<f64>,
    /// Endpoint distance from the reference run at the finest tolerance.
    pub endpoint_errors: Vec<f64>,
    /// Least-squares slope of `ln(error)` against `ln(mean step)`; infinite
    /// when every run already agrees with the reference to rounding.
    pub observed_order: f64,
}

/// Self-convergence under repeated halving of `local_tol`.
///
/// Runs `levels` tolerances `tol0 / 2^k` and compares each endpoint against
/// a reference run at `1e-12`.
pub fn self_convergence(
    ode: ProfileOde,
    initial: ProfileState,
    s_max: f64,
    tol0: f64,
    levels: usize,
) -> Result<ConvergenceStudy> {
    let reference = integrate_endpoint(ode, initial, s_max, 1e-12)?.state;
    let mut tolerances = Vec::new();
    let mut mean_steps = Vec::new();
    let mut endpoint_errors = Vec::new();
    for k in 0..levels {
        let tol = tol0 / 2f64.powi(k as i32);
        let run = integrate_endpoint(ode, initial, s_max, tol)?;
        let d = [
            run.state.psi - reference.psi,
            run.state.phi - reference.phi,
            run.state.theta - reference.theta,
        ];
        tolerances.push(tol);
        mean_steps.push(run.mean_step);
        endpoint_errors.push(d.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    let xs: Vec<f64> = mean_steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = endpoint_errors.iter().map(|e| e.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    // Runs already exact to rounding carry no order information.
    let exact = endpoint_errors.iter().all(|&e| e < ROUNDOFF_FLOOR);
    let observed_order = if exact { f64::INFINITY } else { sxy / sxx };
    Ok(ConvergenceStudy { tolerances, mean_steps, endpoint_errors, observed_order })
}

/// Five-point first and second differences at interior sample `i` of a
/// uniform grid with spacing `h`.
fn fd12(v: &[f64], i: usize, h: f64) -> (f64, f64) {
    let d1 = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    let d2 = (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h * h);
    (d1, d2)
}

/// Longest uniformly spaced prefix of the samples.
fn uniform_prefix(curve: &ProfileCurve) -> (usize, f64) {
    let xs = &curve.samples;
    if xs.len() < 2 {
        return (xs.len(), 0.0);
    }
    let h = xs[1].s - xs[0].s;
    let mut len = 2;
    while len < xs.len() && ((xs[len].s - xs[len - 1].s) - h).abs() <= 1e-9 * h {
        len += 1;
    }
    (len, h)
}

/// Finite-difference reconstruction of `kappa = phi' psi'' - phi'' psi'`
/// on the samples, compared with the family's equation.
pub fn profile_curvature_report(curve: &ProfileCurve) -> Result<ResidualReport> {
    let (len, h) = uniform_prefix(curve);
    if len < 5 {
        return Err(GeomError::InsufficientSamples { needed: 5, got: len });
    }
    let xs = &curve.samples[..len];
    let psi: Vec<f64> = xs.iter().map(|x| x.psi).collect();
    let phi: Vec<f64> = xs.iter().map(|x| x.phi).collect();
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut k1_max = 0.0_f64;
    for i in 2..len - 2 {
        let (psi1, psi2) = fd12(&psi, i, h);
        let (phi1, phi2) = fd12(&phi, i, h);
        let kappa_fd = phi1 * psi2 - phi2 * psi1;
        let kappa_eq = curve.kappa(&xs[i])?;
        grid.push(vec![xs[i].s]);
        values.push((kappa_fd - kappa_eq).abs());
        k1_max = k1_max.max(kappa_eq.abs());
    }
    Ok(ResidualReport::new(format!("profile_curvature[{}]", curve.family), grid, values, 1e-7)
        .with_note(format!("k1 = -kappa; max |k1| on samples = {k1_max:.6e}")))
}

/// Finite-difference reconstruction of `|psi'^2 + phi'^2 - 1|` on the samples.
pub fn unit_speed_report(curve: &ProfileCurve) -> Result<ResidualReport> {
    let (len, h) = uniform_prefix(curve);
    if len < 5 {
        return Err(GeomError::InsufficientSamples { needed: 5, got: len });
    }
    let xs = &curve.samples[..len];
    let psi: Vec<f64> = xs.iter().map(|x| x.psi).collect();
    let phi: Vec<f64> = xs.iter().map(|x| x.phi).collect();
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for i in 2..len - 2 {
        let (a, _) = fd12(&psi, i, h);
        let (b, _) = fd12(&phi, i, h);
        grid.push(vec![xs[i].s]);
        values.push((a * a + b * b - 1.0).abs());
    }
    Ok(ResidualReport::new("unit_speed", grid, values, 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn rotational_rhs_substitutions() {
        let st = ProfileState::new(1.3, 0.7, 0.0);
        let d = rotational_rhs(st, 2, 3).unwrap();
        assert_eq!(d[0], 1.0);
        assert_eq!(d[1], 0.0);
        assert!((d[2] - 3.0 / (3.0 * 0.7)).abs() < 1e-15);
        let st = ProfileState::new(1.3, 0.7, std::f64::consts::FRAC_PI_2);
        let d = rotational_rhs(st, 2, 3).unwrap();
        assert!((d[2] + 2.0 / (3.0 * 1.3)).abs() < 1e-15);
    }

    #[test]
    fn cylinder_rhs_signs() {
        assert_eq!(cylinder_rhs(ProfileState::new(1.0, 0.0, 0.0), 2).unwrap()[2], 0.0);
        for theta in [0.1, 1.0, 2.0, 3.0] {
            assert!(cylinder_rhs(ProfileState::new(0.8, -3.0, theta), 3).unwrap()[2] < 0.0);
        }
    }

    #[test]
    fn poles_are_rejected() {
        assert!(matches!(
            rotational_rhs(ProfileState::new(1.0, 1e-7, 0.0), 1, 1),
            Err(GeomError::PoleHit { .. })
        ));
        assert!(matches!(
            cylinder_rhs(ProfileState::new(0.0, 1.0, 0.0), 1),
            Err(GeomError::PoleHit { .. })
        ));
        assert!(cylinder_rhs(ProfileState::new(1.0, 0.0, 0.0), 1).is_ok());
    }

    #[test]
    fn straight_cylinder_profile_is_fixed_point() {
        let c = integrate_profile(Family::Cylinder, 2, 2, ProfileState::new(1.0, 0.0, 0.0), 1.0, 1e-10)
            .unwrap();
        assert!(!c.halted_early);
        assert_eq!(c.samples.len(), DEFAULT_SAMPLES);
        for x in &c.samples {
            assert_eq!(x.theta, 0.0);
            assert_eq!(x.phi, 0.0);
            assert!((x.psi - (1.0 + x.s)).abs() < 1e-12);
        }
        let r = profile_curvature_report(&c).unwrap();
        assert!(r.max < 1e-9);
    }

    #[test]
    fn bad_inputs_are_reported() {
        let init = ProfileState::new(1.0, 1.0, FRAC_PI_4);
        assert!(matches!(
            integrate_profile(Family::Rotational, 0, 2, init, 1.0, 1e-10),
            Err(GeomError::BadInitial(_))
        ));
        assert!(matches!(
            integrate_profile(Family::Rotational, 2, 2, init, 1.0, 1e-3),
            Err(GeomError::BadInitial(_))
        ));
        assert!(matches!(
            integrate_profile(Family::Rotational, 2, 2, ProfileState::new(1.0, 0.0, 0.0), 1.0, 1e-10),
            Err(GeomError::BadInitial(_))
        ));
    }

    #[test]
    fn halts_before_pole_with_flag() {
        // theta = pi heads straight into psi = 0.
        let c = integrate_profile(
            Family::Cylinder,
            1,
            1,
            ProfileState::new(0.3, 0.0, std::f64::consts::PI),
            5.0,
            1e-9,
        )
        .unwrap();
        assert!(c.halted_early);
        let last = c.samples.last().unwrap();
        assert!(last.psi < 10.0 * POLE_TOL);
        assert!(c.samples.windows(2).all(|w| w[1].s > w[0].s));
    }

    #[test]
    fn derivative_formulas_match_differences_of_state() {
        let c = integrate_profile(Family::Rotational, 2, 1, ProfileState::new(1.0, 1.0, FRAC_PI_4), 0.5, 1e-11)
            .unwrap();
        let s0 = 0.2371;
        let d = c.derivatives_at(s0).unwrap();
        let h = 1e-3;
        let at = |s: f64| c.derivatives_at(s).unwrap();
        for k in 0..3 {
            let fd_psi = (at(s0 - 2.0 * h).psi[k] - 8.0 * at(s0 - h).psi[k] + 8.0 * at(s0 + h).psi[k]
                - at(s0 + 2.0 * h).psi[k])
                / (12.0 * h);
            let fd_phi = (at(s0 - 2.0 * h).phi[k] - 8.0 * at(s0 - h).phi[k] + 8.0 * at(s0 + h).phi[k]
                - at(s0 + 2.0 * h).phi[k])
                / (12.0 * h);
            assert!((fd_psi - d.psi[k + 1]).abs() < 1e-9, "psi order {}", k + 1);
            assert!((fd_phi - d.phi[k + 1]).abs() < 1e-9, "phi order {}", k + 1);
        }
    }
}
