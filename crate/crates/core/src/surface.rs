//! Parametric hypersurface charts and derivative jets.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::linalg::min_eigenvalue;
use crate::taylor::Taylor;
use crate::tolerances::RANK_TOL;

/// An immersion written against [`Taylor`] arithmetic, so that derivative
/// jets come out exact.
pub trait Immersion: Send + Sync + fmt::Debug {
    fn dim_domain(&self) -> usize;

    fn map(&self, u: &[Taylor]) -> Vec<Taylor>;
}

/// Point-valued chart used when no analytic jet is available.
pub type SampledChart = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum Chart {
    Analytic(Arc<dyn Immersion>),
    /// Finite-difference fallback with base step `h_fd`.
    Sampled { f: SampledChart, h_fd: f64 },
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chart::Analytic(imm) => write!(f, "Analytic({imm:?})"),
            Chart::Sampled { h_fd, .. } => write!(f, "Sampled {{ h_fd: {h_fd} }}"),
        }
    }
}

/// Closed parameter interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A chart from a parameter box in `R^n` into `E^{n+1}`.
#[derive(Debug, Clone)]
pub struct ParametricHypersurface {
    name: String,
    dim_domain: usize,
    domain: Vec<Interval>,
    chart: Chart,
    orientation: f64,
}

impl ParametricHypersurface {
    pub fn new(name: impl Into<String>, domain: Vec<Interval>, chart: Chart) -> Result<Self> {
        let dim_domain = domain.len();
        if dim_domain < 2 {
            return Err(GeomError::BadParams(format!(
                "hypersurface needs at least 2 parameters, got {dim_domain}"
            )));
        }
        if let Chart::Analytic(imm) = &chart {
            if imm.dim_domain() != dim_domain {
                return Err(GeomError::BadParams(format!(
                    "chart expects {} parameters but domain has {dim_domain}",
                    imm.dim_domain()
                )));
            }
        }
        if domain.iter().any(|iv| !(iv.lo < iv.hi)) {
            return Err(GeomError::BadParams("empty parameter interval".into()));
        }
        Ok(Self { name: name.into(), dim_domain, domain, chart, orientation: 1.0 })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_domain(&self) -> usize {
        self.dim_domain
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim_domain + 1
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn has_analytic_jet(&self) -> bool {
        matches!(self.chart, Chart::Analytic(_))
    }

    /// `+1` keeps the determinant-rule normal, `-1` flips it.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn with_orientation(mut self, sign: f64) -> Self {
        self.orientation = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    /// Flips the orientation so that the unit normal at the domain centre
    /// has positive inner product with `reference`.
    pub fn orient_towards(self, reference: impl Fn(&[f64], &[f64]) -> Vec<f64>) -> Result<Self> {
        let centre: Vec<f64> = self.domain.iter().map(Interval::mid).collect();
        let jet = evaluate_jet(&self.clone().with_orientation(1.0), &centre, 1)?;
        let normal = crate::geometry::unit_normal(&jet)?;
        let target = reference(&centre, jet.point.as_slice());
        let dot: f64 = normal.iter().zip(&target).map(|(a, b)| a * b).sum();
        Ok(self.with_orientation(if dot < 0.0 { -1.0 } else { 1.0 }))
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim_domain
            && u.iter().zip(&self.domain).all(|(&x, iv)| x > iv.lo && x < iv.hi)
    }

    pub fn centre(&self) -> Vec<f64> {
        self.domain.iter().map(Interval::mid).collect()
    }

    /// Copy of this surface that forgets its analytic jet and uses the
    /// finite-difference fallback with step `h_fd`.
    pub fn to_sampled(&self, h_fd: f64) -> Self {
        let this = self.clone();
        let f: SampledChart = Arc::new(move |u: &[f64]| this.point(u));
        Self {
            name: format!("{} (sampled)", self.name),
            dim_domain: self.dim_domain,
            domain: self.domain.clone(),
            chart: Chart::Sampled { f, h_fd },
            orientation: self.orientation,
        }
    }

    /// Point `x(u)` without derivatives.
    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        match &self.chart {
            Chart::Analytic(imm) => {
                let vars = Taylor::variables(u, 0);
                imm.map(&vars).iter().map(Taylor::value).collect()
            }
            Chart::Sampled { f, .. } => f(u),
        }
    }
}

/// Value and partial derivatives of the immersion at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub order: usize,
    pub u: Vec<f64>,
    pub orientation: f64,
    pub point: DVector<f64>,
    pub d1: Vec<DVector<f64>>,
    pub d2: Vec<Vec<DVector<f64>>>,
    pub d3: Vec<Vec<Vec<DVector<f64>>>>,
}

impl Jet {
    pub fn dim_domain(&self) -> usize {
        self.d1.len()
    }

    pub fn dim_ambient(&self) -> usize {
        self.point.len()
    }

    /// `(n+1) × n` matrix with columns `x_{t_i}`.
    pub fn jacobian(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.d1)
    }

    fn from_taylor(u: &[f64], order: usize, orientation: f64, comps: &[Taylor]) -> Self {
        let n = u.len();
        let m = comps.len();
        let point = DVector::from_iterator(m, comps.iter().map(Taylor::value));
        let d1 = (0..n)
            .map(|i| DVector::from_iterator(m, comps.iter().map(|c| c.d1(i))))
            .collect();
        let d2 = if order >= 2 {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| DVector::from_iterator(m, comps.iter().map(|c| c.d2(i, j))))
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        let d3 = if order >= 3 {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            (0..n)
                                .map(|k| {
                                    DVector::from_iterator(m, comps.iter().map(|c| c.d3(i, j, k)))
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        Self { order, u: u.to_vec(), orientation, point, d1, d2, d3 }
    }
}

fn check_order(order: usize) -> Result<()> {
    if !(1..=3).contains(&order) {
        return Err(GeomError::BadParams(format!("jet order must be 1, 2 or 3, got {order}")));
    }
    Ok(())
}

/// Derivative jet of the chart at `u`.
///
/// Analytic charts return exact derivatives; sampled charts fall back on
/// five-point central differences.
pub fn evaluate_jet(surface: &ParametricHypersurface, u: &[f64], order: usize) -> Result<Jet> {
    check_order(order)?;
    if !surface.contains(u) {
        return Err(GeomError::OutOfDomain { point: u.to_vec() });
    }
    let jet = match &surface.chart {
        Chart::Analytic(imm) => {
            let vars = Taylor::variables(u, order);
            let comps = imm.map(&vars);
            Jet::from_taylor(u, order, surface.orientation, &comps)
        }
        Chart::Sampled { f, h_fd } => fd_jet(f.as_ref(), u, order, *h_fd, surface.orientation),
    };
    check_rank(&jet)?;
    Ok(jet)
}

fn check_rank(jet: &Jet) -> Result<()> {
    let j = jet.jacobian();
    let gram = j.transpose() * &j;
    let lam = min_eigenvalue(&gram).max(0.0);
    let sigma_min = lam.sqrt();
    if !(sigma_min > RANK_TOL) {
        return Err(GeomError::RankDeficient { sigma_min });
    }
    Ok(())
}

const SEVEN_POINT: [(f64, f64); 6] =
    [(-3.0, -1.0), (-2.0, 9.0), (-1.0, -45.0), (1.0, 45.0), (2.0, -9.0), (3.0, 1.0)];
const FIVE_POINT: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

/// Five-point central derivative of a vector-valued function along one axis.
pub fn five_point(f: impl Fn(&[f64]) -> Vec<f64>, u: &[f64], axis: usize, h: f64) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for (off, w) in FIVE_POINT {
        let mut p = u.to_vec();
        p[axis] += off * h;
        let v = f(&p);
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    acc.iter().map(|a| a / (12.0 * h)).collect()
}

/// Fallible variant of [`five_point`].
pub fn try_five_point(
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    u: &[f64],
    axis: usize,
    h: f64,
) -> Result<Vec<f64>> {
    let mut acc: Vec<f64> = Vec::new();
    for (off, w) in FIVE_POINT {
        let mut p = u.to_vec();
        p[axis] += off * h;
        let v = f(&p)?;
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    Ok(acc.iter().map(|a| a / (12.0 * h)).collect())
}

/// Sixth-order central first derivative; stops at the first failing sample.
pub fn try_seven_point(
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    u: &[f64],
    axis: usize,
    h: f64,
) -> Result<Vec<f64>> {
    let mut acc: Vec<f64> = Vec::new();
    for (off, w) in SEVEN_POINT {
        let mut p = u.to_vec();
        p[axis] += off * h;
        let v = f(&p)?;
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    Ok(acc.iter().map(|a| a / (60.0 * h)).collect())
}

fn fd_jet(
    f: &(dyn Fn(&[f64]) -> Vec<f64> + Send + Sync),
    u: &[f64],
    order: usize,
    h: f64,
    orientation: f64,
) -> Jet {
    let n = u.len();
    let point = f(u);
    let m = point.len();
    let to_vec = |v: Vec<f64>| DVector::from_vec(v);
    // Nested stencils amplify rounding, so higher orders use wider steps.
    let h2 = h * 10.0;
    let h3 = h * 100.0;
    let d1: Vec<DVector<f64>> = (0..n).map(|i| to_vec(five_point(f, u, i, h))).collect();
    let mut d2 = Vec::new();
    if order >= 2 {
        d2 = vec![vec![DVector::zeros(m); n]; n];
        for i in 0..n {
            for j in i..n {
                let di = |p: &[f64]| five_point(f, p, i, h2);
                let v = to_vec(five_point(di, u, j, h2));
                d2[i][j] = v.clone();
                d2[j][i] = v;
            }
        }
    }
    let mut d3 = Vec::new();
    if order >= 3 {
        d3 = vec![vec![vec![DVector::zeros(m); n]; n]; n];
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let dij = |p: &[f64]| {
                        let di = |q: &[f64]| five_point(f, q, i, h3);
                        five_point(di, p, j, h3)
                    };
                    let v = to_vec(five_point(dij, u, k, h3));
                    for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        d3[a][b][c] = v.clone();
                    }
                }
            }
        }
    }
    Jet { order, u: u.to_vec(), orientation, point: to_vec(point), d1, d2, d3 }
}

/// Largest mixed relative defect between the analytic jet and five-point
/// differences of the next-lower analytic jet, over all derivative orders
/// up to three. Defects are measured as `|a - b| / (1 + |a|)`.
pub fn jet_fd_defect(surface: &ParametricHypersurface, u: &[f64], h: f64) -> Result<f64> {
    let n = surface.dim_domain();
    let full = evaluate_jet(surface, u, 3)?;
    for axis in 0..n {
        for sign in [-2.0, 2.0] {
            let mut p = u.to_vec();
            p[axis] += sign * h;
            if !surface.contains(&p) {
                return Err(GeomError::NearPole { point: u.to_vec() });
            }
        }
    }
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs());
    let mut worst = 0.0_f64;
    for k in 0..n {
        let dp = five_point(|p| surface.point(p), u, k, h);
        for (a, b) in full.d1[k].iter().zip(&dp) {
            worst = worst.max(rel(*a, *b));
        }
        let lower = |order: usize| {
            move |p: &[f64]| -> Result<Vec<f64>> {
                let jet = evaluate_jet(surface, p, order)?;
                let mut out = Vec::new();
                if order == 1 {
                    for v in &jet.d1 {
                        out.extend(v.iter());
                    }
                } else {
                    for row in &jet.d2 {
                        for v in row {
                            out.extend(v.iter());
                        }
                    }
                }
                Ok(out)
            }
        };
        let dd1 = try_five_point(lower(1), u, k, h)?;
        let m = surface.dim_ambient();
        for i in 0..n {
            for c in 0..m {
                worst = worst.max(rel(full.d2[i][k][c], dd1[i * m + c]));
            }
        }
        let dd2 = try_five_point(lower(2), u, k, h)?;
        for i in 0..n {
            for j in 0..n {
                for c in 0..m {
                    worst = worst.max(rel(full.d3[i][j][k][c], dd2[(i * n + j) * m + c]));
                }
            }
        }
    }
    Ok(worst)
}
