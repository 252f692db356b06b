//! Charts of the classified families and of reference/control surfaces.
//!
//! Every chart here is an [`Immersion`], so jets to order three are exact.
//! Angular blocks use nested spherical coordinates
//! `(cos t1, sin t1 cos t2, ..., sin t1 ... sin t_{m-1} cos t_m, sin t1 ... sin t_m)`
//! with polar angles in `[0, pi]` and the last angle of a block in `[0, 2 pi]`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::profile::{Family, ProfileCurve};
use crate::surface::{Chart, Immersion, Interval, ParametricHypersurface};
use crate::taylor::Taylor;
use crate::tolerances::POLE_MARGIN;

/// Largest supported parameter dimension.
pub const MAX_DIM: usize = 8;

/// Unit vector in `R^{m+1}` from `m` nested spherical angles.
pub fn spherical_factor(angles: &[Taylor]) -> Vec<Taylor> {
    assert!(!angles.is_empty(), "spherical factor needs at least one angle");
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut sin_prod: Option<Taylor> = None;
    for t in angles {
        let c = t.cos();
        let s = t.sin();
        match sin_prod.take() {
            None => {
                out.push(c);
                sin_prod = Some(s);
            }
            Some(prod) => {
                out.push(&prod * &c);
                sin_prod = Some(&prod * &s);
            }
        }
    }
    out.push(sin_prod.expect("non-empty angle list"));
    out
}

pub fn spherical_factor_point(angles: &[f64]) -> Vec<f64> {
    let vars: Vec<Taylor> = angles.iter().map(|&a| Taylor::constant(a, 1, 0)).collect();
    spherical_factor(&vars).iter().map(Taylor::value).collect()
}

fn angle_block(m: usize) -> Vec<Interval> {
    (0..m)
        .map(|i| if i + 1 == m { Interval::new(0.0, TAU) } else { Interval::new(0.0, PI) })
        .collect()
}

const FLAT_HALF_WIDTH: f64 = 1.0;

fn flat_block(q: usize) -> Vec<Interval> {
    vec![Interval::new(-FLAT_HALF_WIDTH, FLAT_HALF_WIDTH); q]
}

/// `psi(s)` and `phi(s)` composed onto a Taylor variable.
fn profile_functions(curve: &ProfileCurve, s: &Taylor) -> (Taylor, Taylor) {
    match curve.derivatives_at(s.value()) {
        Ok(d) => (s.compose(d.psi), s.compose(d.phi)),
        Err(_) => {
            let nan = [f64::NAN; 4];
            (s.compose(nan), s.compose(nan))
        }
    }
}

#[derive(Debug)]
struct RotationalChart {
    profile: ProfileCurve,
    p: usize,
    q: usize,
}

impl Immersion for RotationalChart {
    fn dim_domain(&self) -> usize {
        1 + self.p + self.q
    }

    fn map(&self, u: &[Taylor]) -> Vec<Taylor> {
        let (psi, phi) = profile_functions(&self.profile, &u[0]);
        let theta1 = spherical_factor(&u[1..=self.p]);
        let theta2 = spherical_factor(&u[self.p + 1..]);
        theta1
            .iter()
            .map(|c| &psi * c)
            .chain(theta2.iter().map(|c| &phi * c))
            .collect()
    }
}

#[derive(Debug)]
struct CylinderChart {
    profile: ProfileCurve,
    p: usize,
}

impl Immersion for CylinderChart {
    fn dim_domain(&self) -> usize {
        1 + self.p + self.profile.q
    }

    fn map(&self, u: &[Taylor]) -> Vec<Taylor> {
        let (psi, phi) = profile_functions(&self.profile, &u[0]);
        let theta1 = spherical_factor(&u[1..=self.p]);
        let mut out: Vec<Taylor> = theta1.iter().map(|c| &psi * c).collect();
        out.push(phi);
        out.extend(u[self.p + 1..].iter().cloned());
        out
    }
}

fn check_blocks(p: usize, q: usize) -> Result<()> {
    if p < 1 {
        return Err(GeomError::BadParams("p must be >= 1".into()));
    }
    if q < 1 {
        return Err(GeomError::BadParams("q must be >= 1".into()));
    }
    if p + q + 1 > MAX_DIM {
        return Err(GeomError::BadParams(format!("p + q + 1 = {} exceeds {MAX_DIM}", p + q + 1)));
    }
    Ok(())
}

fn check_profile(profile: &ProfileCurve, family: Family, p: usize, q: usize) -> Result<()> {
    if profile.family != family {
        return Err(GeomError::FamilyMismatch {
            expected: family.to_string(),
            found: profile.family.to_string(),
        });
    }
    check_blocks(p, q)?;
    if profile.p != p || profile.q != q {
        return Err(GeomError::BadParams(format!(
            "profile was integrated for (p, q) = ({}, {}), requested ({p}, {q})",
            profile.p, profile.q
        )));
    }
    if profile.samples.len() < 2 {
        return Err(GeomError::InsufficientSamples { needed: 2, got: profile.samples.len() });
    }
    let min = profile.min_pole_distance();
    if !(min > POLE_MARGIN) {
        return Err(GeomError::PoleMargin { min, margin: POLE_MARGIN });
    }
    Ok(())
}

fn profile_interval(profile: &ProfileCurve) -> Interval {
    let (lo, hi) = profile.s_range();
    Interval::new(lo, hi)
}

/// `x(s, t) = (psi(s) Theta_1(t_2..t_{p+1}), phi(s) Theta_2(t_{p+2}..t_n))`.
///
/// Oriented so that the unit normal is `(-phi' Theta_1, psi' Theta_2)`, which
/// gives the shape operator `diag(theta', phi'/psi (p times), -psi'/phi (q times))`.
pub fn generalized_rotational(profile: &ProfileCurve, p: usize, q: usize) -> Result<ParametricHypersurface> {
    check_profile(profile, Family::Rotational, p, q)?;
    let mut domain = vec![profile_interval(profile)];
    domain.extend(angle_block(p));
    domain.extend(angle_block(q));
    let chart = RotationalChart { profile: profile.clone(), p, q };
    let curve = profile.clone();
    ParametricHypersurface::new(
        format!("generalized_rotational(p={p}, q={q})"),
        domain,
        Chart::Analytic(Arc::new(chart)),
    )?
    .orient_towards(move |u, _| {
        let d = curve.derivatives_at(u[0]).expect("centre of profile range");
        let t1 = spherical_factor_point(&u[1..=p]);
        let t2 = spherical_factor_point(&u[p + 1..]);
        t1.iter().map(|c| -d.phi[1] * c).chain(t2.iter().map(|c| d.psi[1] * c)).collect()
    })
}

/// `x(s, t) = (psi(s) Theta_1(t_2..t_{p+1}), phi(s), t_{p+2}, ..., t_n)`.
///
/// Oriented so that the unit normal is `(-phi' Theta_1, psi', 0, ..., 0)`.
pub fn generalized_cylinder(profile: &ProfileCurve, p: usize, q: usize) -> Result<ParametricHypersurface> {
    check_profile(profile, Family::Cylinder, p, q)?;
    let mut domain = vec![profile_interval(profile)];
    domain.extend(angle_block(p));
    domain.extend(flat_block(q));
    let chart = CylinderChart { profile: profile.clone(), p };
    let curve = profile.clone();
    ParametricHypersurface::new(
        format!("generalized_cylinder(p={p}, q={q})"),
        domain,
        Chart::Analytic(Arc::new(chart)),
    )?
    .orient_towards(move |u, _| {
        let d = curve.derivatives_at(u[0]).expect("centre of profile range");
        let t1 = spherical_factor_point(&u[1..=p]);
        let mut v: Vec<f64> = t1.iter().map(|c| -d.phi[1] * c).collect();
        v.push(d.psi[1]);
        v.extend(std::iter::repeat(0.0).take(q));
        v
    })
}

/// Reference and control surfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceKind {
    /// `S^n(r)` in `E^{n+1}`.
    Sphere { n: usize, radius: f64 },
    /// `S^p(r) x E^q`.
    RoundCylinder { p: usize, q: usize, radius: f64 },
    /// Coordinate hyperplane `x_{n+1} = 0`.
    Plane { n: usize },
    /// Ellipsoid with semi-axes `a_0, ..., a_n` in `E^{n+1}`.
    Ellipsoid { semi_axes: Vec<f64> },
    /// Tube of revolution `((R + r cos a) Theta(t_1..t_p), r sin a)` in `E^{p+2}`.
    Torus { p: usize, major: f64, minor: f64 },
}

#[derive(Debug)]
struct SphereChart {
    n: usize,
    radius: f64,
}

impl Immersion for SphereChart {
    fn dim_domain(&self) -> usize {
        self.n
    }

    fn map(&self, u: &[Taylor]) -> Vec<Taylor> {
        spherical_factor(u).iter().map(|c| c * self.radius).collect()
    }
}

#[derive(Debug)]
struct RoundCylinderChart {
    p: usize,
    q: usize,
    radius: f64,
}

impl Immersion for RoundCylinderChart {
    fn dim_domain(&self) -> usize {
        self.p + self.q
    }

    fn map(&self, u: &[Taylor]) -> Vec<Taylor> {
        let mut out: Vec<Taylor> = spherical_factor(&u[..self.p]).iter().map(|c| c * self.radius).collect();
        out.extend(u[self.p..].iter().cloned());
        out
    }
}

#[derive(Debug)]
struct PlaneChart {
    n: usize,
}

impl Immersion for PlaneChart {
    fn dim_domain(&self) -> usize {
        self.n
    }

    fn map(&self, u: &[Taylor]) -> Vec<Taylor> {
        let mut out = u.to_vec();
        out.push(Taylor::constant(0.0, u[0].nvars(), u[0].order()));
        out
    }
}

#[derive(Debug)]
struct EllipsoidChart {
    semi_axes: Vec<f64>,
}

impl Immersion for EllipsoidChart {
    fn dim_domain(&self) -> usize {
        self.semi_axes.len() - 1
    }

    fn map(&self, u: &[Taylor]) -> Vec<Taylor> {
        spherical_factor(u).iter().zip(&self.semi_axes).map(|(c, &a)| c * a).collect()
    }
}

#[derive(Debug)]
struct TorusChart {
    p: usize,
    major: f64,
    minor: f64,
}

impl Immersion for TorusChart {
    fn dim_domain(&self) -> usize {
        self.p + 1
    }

    fn map(&self, u: &[Taylor]) -> Vec<Taylor> {
        let a = &u[0];
        let rho = a.cos().scale(self.minor).add_scalar(self.major);
        let mut out: Vec<Taylor> = spherical_factor(&u[1..]).iter().map(|c| &rho * c).collect();
        out.push(a.sin().scale(self.minor));
        out
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(GeomError::BadParams(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

/// Builds a reference surface. Spheres, cylinders, ellipsoids and tori are
/// oriented by the inward normal (positive curvature), the plane by `+e_{n+1}`.
pub fn reference_surface(kind: &ReferenceKind) -> Result<ParametricHypersurface> {
    match kind {
        ReferenceKind::Sphere { n, radius } => {
            let n = *n;
            if !(2..=MAX_DIM).contains(&n) {
                return Err(GeomError::BadParams(format!("sphere dimension {n} outside [2, {MAX_DIM}]")));
            }
            positive("radius", *radius)?;
            ParametricHypersurface::new(
                format!("sphere(n={n}, r={radius})"),
                angle_block(n),
                Chart::Analytic(Arc::new(SphereChart { n, radius: *radius })),
            )?
            .orient_towards(|_, x| neg(x))
        }
        ReferenceKind::RoundCylinder { p, q, radius } => {
            let (p, q) = (*p, *q);
            check_blocks(p, q)?;
            positive("radius", *radius)?;
            let mut domain = angle_block(p);
            domain.extend(flat_block(q));
            ParametricHypersurface::new(
                format!("round_cylinder(p={p}, q={q}, r={radius})"),
                domain,
                Chart::Analytic(Arc::new(RoundCylinderChart { p, q, radius: *radius })),
            )?
            .orient_towards(move |_, x| {
                let mut v = neg(&x[..=p]);
                v.extend(std::iter::repeat(0.0).take(q));
                v
            })
        }
        ReferenceKind::Plane { n } => {
            let n = *n;
            if !(2..=MAX_DIM).contains(&n) {
                return Err(GeomError::BadParams(format!("plane dimension {n} outside [2, {MAX_DIM}]")));
            }
            ParametricHypersurface::new(
                format!("plane(n={n})"),
                vec![Interval::new(-5.0, 5.0); n],
                Chart::Analytic(Arc::new(PlaneChart { n })),
            )?
            .orient_towards(move |_, _| {
                let mut v = vec![0.0; n + 1];
                v[n] = 1.0;
                v
            })
        }
        ReferenceKind::Ellipsoid { semi_axes } => {
            let n = semi_axes.len().saturating_sub(1);
            if !(2..=MAX_DIM).contains(&n) {
                return Err(GeomError::BadParams(format!(
                    "ellipsoid needs between 3 and {} semi-axes, got {}",
                    MAX_DIM + 1,
                    semi_axes.len()
                )));
            }
            for &a in semi_axes {
                positive("semi-axis", a)?;
            }
            let axes = semi_axes.clone();
            ParametricHypersurface::new(
                format!("ellipsoid(axes={semi_axes:?})"),
                angle_block(n),
                Chart::Analytic(Arc::new(EllipsoidChart { semi_axes: semi_axes.clone() })),
            )?
            .orient_towards(move |_, x| x.iter().zip(&axes).map(|(xi, a)| -xi / (a * a)).collect())
        }
        ReferenceKind::Torus { p, major, minor } => {
            let p = *p;
            if !(1..MAX_DIM).contains(&p) {
                return Err(GeomError::BadParams(format!("torus sphere block {p} outside [1, {}]", MAX_DIM - 1)));
            }
            positive("minor radius", *minor)?;
            if !(*major > *minor) {
                return Err(GeomError::BadParams("torus needs major radius > minor radius".into()));
            }
            let mut domain = vec![Interval::new(0.0, TAU)];
            domain.extend(angle_block(p));
            ParametricHypersurface::new(
                format!("torus(p={p}, R={major}, r={minor})"),
                domain,
                Chart::Analytic(Arc::new(TorusChart { p, major: *major, minor: *minor })),
            )?
            .orient_towards(move |u, _| {
                let (s, c) = u[0].sin_cos();
                let mut v: Vec<f64> = spherical_factor_point(&u[1..]).iter().map(|t| -c * t).collect();
                v.push(-s);
                v
            })
        }
    }
}
