//! Least-squares fits of slices and traced curves to spheres, circles,
//! planes and lines.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::curvature_derivatives;
use crate::error::{GeomError, Result};
use crate::geometry::point_geometry;
use crate::grid::chebyshev_nodes;
use crate::linalg::jacobi_eigen;
use crate::report::ResidualReport;
use crate::surface::ParametricHypersurface;
use crate::tolerances::{GRAD_FLOOR, GRID_MARGIN, KAPPA_FLOOR};

/// Principal axes of a point cloud: centroid and the covariance
/// eigenvectors sorted by decreasing variance.
fn principal_axes(points: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let dim = points[0].len();
    let mut mean = DVector::zeros(dim);
    for p in points {
        mean += p;
    }
    mean /= points.len() as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for p in points {
        let d = p - &mean;
        cov += &d * d.transpose();
    }
    let (vals, vecs) = jacobi_eigen(&cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let axes = DMatrix::from_fn(dim, dim, |r, c| vecs[(r, order[c])]);
    (mean, axes)
}

/// Coordinates in the leading `k` principal axes and the distance to that
/// affine span, per point.
fn project(points: &[DVector<f64>], mean: &DVector<f64>, axes: &DMatrix<f64>, k: usize) -> (Vec<DVector<f64>>, Vec<f64>) {
    let basis = axes.columns(0, k);
    points
        .iter()
        .map(|p| {
            let d = p - mean;
            let y: DVector<f64> = basis.transpose() * &d;
            let off = (&d - basis * &y).norm();
            (y, off)
        })
        .unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereFit {
    pub centre: Vec<f64>,
    pub radius: f64,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneFit {
    pub origin: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Round `m`-sphere through the points: its `(m+1)`-dimensional affine span
/// by principal axes, then an algebraic (Kasa) fit inside the span.
/// Residuals combine radial error and distance to the span.
pub fn fit_sphere(points: &[DVector<f64>], m: usize) -> Result<SphereFit> {
    if points.len() < m + 2 {
        return Err(GeomError::InsufficientSamples { needed: m + 2, got: points.len() });
    }
    let (mean, axes) = principal_axes(points);
    let k = (m + 1).min(mean.len());
    let (ys, off) = project(points, &mean, &axes, k);
    let a = DMatrix::from_fn(ys.len(), k + 1, |r, c| if c < k { 2.0 * ys[r][c] } else { 1.0 });
    let b = DVector::from_iterator(ys.len(), ys.iter().map(|y| y.norm_squared()));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| GeomError::BadParams(format!("sphere fit failed: {e}")))?;
    let c = sol.rows(0, k).into_owned();
    let radius = (sol[k] + c.norm_squared()).max(0.0).sqrt();
    let residuals = ys
        .iter()
        .zip(&off)
        .map(|(y, o)| ((y - &c).norm() - radius).abs().max(*o))
        .collect();
    let centre = &mean + axes.columns(0, k) * &c;
    Ok(SphereFit { centre: centre.as_slice().to_vec(), radius, residuals })
}

/// Affine `m`-plane through the points by principal axes.
pub fn fit_plane(points: &[DVector<f64>], m: usize) -> Result<PlaneFit> {
    if points.len() < m + 1 {
        return Err(GeomError::InsufficientSamples { needed: m + 1, got: points.len() });
    }
    let (mean, axes) = principal_axes(points);
    let (_, residuals) = project(points, &mean, &axes, m.min(mean.len()));
    Ok(PlaneFit { origin: mean.as_slice().to_vec(), residuals })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceModel {
    Sphere,
    Plane,
    /// Plane when the plane fit is exact to `1e-10` relative to the slice
    /// size, sphere otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceFit {
    pub report: ResidualReport,
    pub model: SliceModel,
    pub radius: Option<f64>,
    pub centre: Option<Vec<f64>>,
}

/// Samples the slice through `base` obtained by varying the coordinates in
/// `block` on a Chebyshev tensor grid with `per_axis` nodes per axis, and
/// fits a round sphere or an affine plane of dimension `block.len()`.
pub fn slice_sphericity_check(
    surface: &ParametricHypersurface,
    base: &[f64],
    block: Range<usize>,
    per_axis: usize,
    model: SliceModel,
    tolerance: f64,
) -> Result<SliceFit> {
    let m = block.len();
    if m == 0 || block.end > surface.dim_domain() || base.len() != surface.dim_domain() {
        return Err(GeomError::BadParams(format!("invalid slice block {block:?}")));
    }
    let mut grid = vec![base.to_vec()];
    for axis in block.clone() {
        let nodes = chebyshev_nodes(surface.domain()[axis], per_axis.max(1), GRID_MARGIN);
        grid = grid
            .into_iter()
            .flat_map(|p| {
                nodes.iter().map(move |&x| {
                    let mut q = p.clone();
                    q[axis] = x;
                    q
                })
            })
            .collect();
    }
    if grid.len() < m + 2 {
        return Err(GeomError::InsufficientSamples { needed: m + 2, got: grid.len() });
    }
    for u in &grid {
        if !surface.contains(u) {
            return Err(GeomError::OutOfDomain { point: u.clone() });
        }
    }
    let points: Vec<DVector<f64>> = grid.iter().map(|u| DVector::from_vec(surface.point(u))).collect();
    let plane = fit_plane(&points, m)?;
    let use_plane = match model {
        SliceModel::Plane => true,
        SliceModel::Sphere => false,
        SliceModel::Auto => {
            let scale = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
            plane.residuals.iter().all(|&r| r < 1e-10 * scale)
        }
    };
    if use_plane {
        let report = ResidualReport::new("slice_plane_fit", grid, plane.residuals, tolerance);
        return Ok(SliceFit { report, model: SliceModel::Plane, radius: None, centre: None });
    }
    let sphere = fit_sphere(&points, m)?;
    let report = ResidualReport::new("slice_sphere_fit", grid, sphere.residuals, tolerance);
    Ok(SliceFit { report, model: SliceModel::Sphere, radius: Some(sphere.radius), centre: Some(sphere.centre) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Circle,
    Line,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveFit {
    pub kind: CurveKind,
    pub fit_residual: f64,
    pub curvature: f64,
    pub points: Vec<Vec<f64>>,
}

/// Planar circle or straight line through ambient points. The curve is a
/// line when the fitted curvature is below `kappa_floor`.
pub fn fit_circle(points: &[DVector<f64>]) -> Result<CurveFit> {
    if points.len() < 4 {
        return Err(GeomError::InsufficientSamples { needed: 4, got: points.len() });
    }
    let (mean, axes) = principal_axes(points);
    let k = 2.min(mean.len());
    let (ys, off) = project(points, &mean, &axes, k);
    let scale = ys.iter().map(|y| y.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let rows: Vec<[f64; 4]> = ys
        .iter()
        .map(|y| {
            let (x, z) = (y[0] / scale, if k > 1 { y[1] / scale } else { 0.0 });
            [x * x + z * z, x, z, 1.0]
        })
        .collect();
    let mat = DMatrix::from_fn(rows.len(), 4, |r, c| rows[r][c]);
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| GeomError::BadParams("circle fit failed".into()))?;
    let imin = (0..4)
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .unwrap_or(3);
    let (a, b, c, d) = (v_t[(imin, 0)], v_t[(imin, 1)], v_t[(imin, 2)], v_t[(imin, 3)]);
    let disc = (b * b + c * c - 4.0 * a * d).max(0.0).sqrt();
    let curvature = if disc > 0.0 { 2.0 * a.abs() / disc / scale } else { f64::INFINITY };
    let points_out = points.iter().map(|p| p.as_slice().to_vec()).collect();
    if curvature < KAPPA_FLOOR {
        let (_, line_off) = project(points, &mean, &axes, 1);
        let fit_residual = line_off.into_iter().fold(0.0, f64::max);
        return Ok(CurveFit { kind: CurveKind::Line, fit_residual, curvature, points: points_out });
    }
    let centre = DVector::from_vec(vec![-b / (2.0 * a) * scale, -c / (2.0 * a) * scale]);
    let radius = 1.0 / curvature;
    let fit_residual = ys
        .iter()
        .zip(&off)
        .map(|(y, o)| {
            let y2 = DVector::from_vec(vec![y[0], if k > 1 { y[1] } else { 0.0 }]);
            ((y2 - &centre).norm() - radius).abs().max(*o)
        })
        .fold(0.0, f64::max);
    Ok(CurveFit { kind: CurveKind::Circle, fit_residual, curvature, points: points_out })
}

/// Which principal direction field to trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnSelector {
    /// A simple principal direction other than the one carrying `grad s1`,
    /// preferring the one closest to the last chart axis.
    Auto,
    /// Eigen index at the start point, followed by continuity.
    Index(usize),
}

fn simple_indices(spectrum: &crate::geometry::CurvatureSpectrum) -> Vec<usize> {
    spectrum.groups.iter().filter(|g| g.multiplicity == 1).map(|g| g.start).collect()
}

fn select_start(surface: &ParametricHypersurface, u0: &[f64], selector: EnSelector) -> Result<DVector<f64>> {
    let cd = curvature_derivatives(surface, u0)?;
    let geom = &cd.geometry;
    let v = &geom.spectrum.eigenvectors;
    let g = &geom.metric.g;
    let n = u0.len();
    let idx = match selector {
        EnSelector::Index(i) if i < n => i,
        EnSelector::Index(i) => return Err(GeomError::BadParams(format!("eigen index {i} out of range"))),
        EnSelector::Auto => {
            let mut candidates = simple_indices(&geom.spectrum);
            if cd.grad_norm > GRAD_FLOOR {
                let gv = g * &cd.grad_s1;
                let aligned = (0..n)
                    .max_by(|&a, &b| v.column(a).dot(&gv).abs().total_cmp(&v.column(b).dot(&gv).abs()))
                    .unwrap_or(0);
                candidates.retain(|&i| i != aligned);
            }
            let last_axis = |i: usize| (g * v.column(i))[n - 1].abs();
            candidates
                .into_iter()
                .max_by(|&a, &b| last_axis(a).total_cmp(&last_axis(b)).then(b.cmp(&a)))
                .ok_or_else(|| GeomError::UnstableFrame { reason: "no simple principal direction to trace".into() })?
        }
    };
    let mut dir = v.column(idx).into_owned();
    if (g * &dir)[n - 1] < 0.0 {
        dir = -dir;
    }
    Ok(dir)
}

/// Unit principal direction at `u` closest to `prev` (same sign).
fn follow(surface: &ParametricHypersurface, u: &[f64], prev: &DVector<f64>, simple_only: bool) -> Result<DVector<f64>> {
    let pg = point_geometry(surface, u, 2)?;
    let v = &pg.spectrum.eigenvectors;
    let gp = &pg.metric.g * prev;
    let candidates: Vec<usize> = if simple_only { simple_indices(&pg.spectrum) } else { (0..u.len()).collect() };
    let best = candidates
        .into_iter()
        .max_by(|&a, &b| v.column(a).dot(&gp).abs().total_cmp(&v.column(b).dot(&gp).abs()))
        .ok_or_else(|| GeomError::UnstableFrame { reason: format!("direction lost near {u:?}") })?;
    let col = v.column(best).into_owned();
    Ok(if col.dot(&gp) < 0.0 { -col } else { col })
}

/// Traces the integral curve of a principal direction field through `u0`
/// by RK4 in arclength and fits a circle or a line to its image.
pub fn en_curve_circle_check(
    surface: &ParametricHypersurface,
    u0: &[f64],
    arc_samples: usize,
    arc_length: f64,
    selector: EnSelector,
) -> Result<CurveFit> {
    if arc_samples < 4 {
        return Err(GeomError::InsufficientSamples { needed: 4, got: arc_samples });
    }
    let simple_only = matches!(selector, EnSelector::Auto);
    let h = arc_length / (arc_samples - 1) as f64;
    let mut u = DVector::from_column_slice(u0);
    let mut dir = select_start(surface, u0, selector)?;
    let mut points = vec![DVector::from_vec(surface.point(u0))];
    for step in 1..arc_samples {
        let field = |p: &DVector<f64>, prev: &DVector<f64>| -> Result<DVector<f64>> {
            if !surface.contains(p.as_slice()) {
                return Err(GeomError::CurveLeftDomain { steps: step - 1 });
            }
            follow(surface, p.as_slice(), prev, simple_only)
        };
        let k1 = field(&u, &dir)?;
        let k2 = field(&(&u + &k1 * (0.5 * h)), &k1)?;
        let k3 = field(&(&u + &k2 * (0.5 * h)), &k2)?;
        let k4 = field(&(&u + &k3 * h), &k3)?;
        u += (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (h / 6.0);
        if !surface.contains(u.as_slice()) {
            return Err(GeomError::CurveLeftDomain { steps: step });
        }
        dir = k4;
        points.push(DVector::from_vec(surface.point(u.as_slice())));
    }
    fit_circle(&points)
}
