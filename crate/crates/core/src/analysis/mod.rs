//! Pointwise and grid-wide curvature identities.
//!
//! Derivatives of principal curvatures come from order-3 jets:
//! `d_l g_ij = <x_il, x_j> + <x_i, x_jl>`,
//! `d_l h_ij = <x_ijl, N> - S^m_l <x_ij, x_m>`,
//! and first-order perturbation of the generalized eigenproblem, averaged
//! over each multiplicity group.

mod fit;
mod frame;

pub use fit::{
    en_curve_circle_check, fit_circle, fit_plane, fit_sphere, slice_sphericity_check, CurveFit, CurveKind,
    EnSelector, PlaneFit, SliceFit, SliceModel, SphereFit,
};
pub use frame::{
    codazzi_report, codazzi_residual, connection_forms, frame_analysis, h_surface_frame_check,
    ConnectionForms, FrameAnalysis, HFrameCheck,
};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::geometry::{point_geometry, PointGeometry};
use crate::report::ResidualReport;
use crate::surface::{five_point, ParametricHypersurface};
use crate::tolerances::{GRAD_FLOOR, H_LB, LAMBDA_TOL, S1_FLOOR};

/// Evaluates `f` on every grid point in parallel; results keep grid order
/// and the first failing point (in grid order) determines the error.
pub fn sweep<T: Send>(grid: &[Vec<f64>], f: impl Fn(&[f64]) -> Result<T> + Sync) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = grid.par_iter().map(|u| f(u)).collect();
    results.into_iter().collect()
}

/// Second-order data plus first derivatives of `s1` and of every
/// principal curvature.
#[derive(Debug, Clone)]
pub struct CurvatureDerivatives {
    pub geometry: PointGeometry,
    /// `d_l s1`.
    pub ds1: DVector<f64>,
    /// `g^{ij} d_j s1`.
    pub grad_s1: DVector<f64>,
    pub grad_norm: f64,
    /// `dk[i][l] = d_l k_i`, using the group-mean derivative for repeated values.
    pub dk: Vec<DVector<f64>>,
}

impl CurvatureDerivatives {
    /// `e_i(k_j)`.
    pub fn directional(&self, i: usize, j: usize) -> f64 {
        self.geometry.spectrum.eigenvectors.column(i).dot(&self.dk[j])
    }

    /// Directional derivative of `s1` along a chart vector.
    pub fn ds1_along(&self, v: &DVector<f64>) -> f64 {
        self.ds1.dot(v)
    }
}

fn metric_and_shape_derivatives(pg: &PointGeometry) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let jet = &pg.jet;
    let n = jet.dim_domain();
    let s = &pg.shape.s;
    let normal = &pg.shape.normal;
    let mut dg = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    for l in 0..n {
        let mut gl = DMatrix::zeros(n, n);
        let mut hl = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let a = jet.d2[i][l].dot(&jet.d1[j]) + jet.d1[i].dot(&jet.d2[j][l]);
                let mut b = jet.d3[i][j][l].dot(normal);
                for m in 0..n {
                    b -= s[(m, l)] * jet.d2[i][j].dot(&jet.d1[m]);
                }
                gl[(i, j)] = a;
                gl[(j, i)] = a;
                hl[(i, j)] = b;
                hl[(j, i)] = b;
            }
        }
        dg.push(gl);
        dh.push(hl);
    }
    (dg, dh)
}

pub fn curvature_derivatives(surface: &ParametricHypersurface, u: &[f64]) -> Result<CurvatureDerivatives> {
    let geometry = point_geometry(surface, u, 3)?;
    let n = surface.dim_domain();
    let (dg, dh) = metric_and_shape_derivatives(&geometry);
    let g_inv = &geometry.metric.g_inv;
    let s = &geometry.shape.s;
    let ds1 = DVector::from_iterator(n, (0..n).map(|l| (g_inv * (&dh[l] - &dg[l] * s)).trace()));
    let grad_s1 = g_inv * &ds1;
    let grad_norm = ds1.dot(&grad_s1).max(0.0).sqrt();
    let spectrum = &geometry.spectrum;
    let v = &spectrum.eigenvectors;
    let mut dk = vec![DVector::zeros(n); n];
    for group in &spectrum.groups {
        let mut d = DVector::zeros(n);
        for i in group.indices() {
            let vi = v.column(i);
            let k = spectrum.eigenvalues[i];
            for l in 0..n {
                d[l] += (vi.transpose() * (&dh[l] - &dg[l] * k) * vi)[(0, 0)];
            }
        }
        d /= group.multiplicity as f64;
        for i in group.indices() {
            dk[i] = d.clone();
        }
    }
    Ok(CurvatureDerivatives { geometry, ds1, grad_s1, grad_norm, dk })
}

/// Chart components of `grad s1`.
pub fn mean_curvature_gradient(surface: &ParametricHypersurface, u: &[f64]) -> Result<DVector<f64>> {
    Ok(curvature_derivatives(surface, u)?.grad_s1)
}

impl CurvatureDerivatives {
    /// `|S(grad s1) + (s1/2) grad s1|_g`.
    pub fn h_defect(&self) -> f64 {
        let s1 = self.geometry.s1();
        let defect = &self.geometry.shape.s * &self.grad_s1 + &self.grad_s1 * (0.5 * s1);
        self.geometry.metric.norm(&defect)
    }
}

/// `|S(grad s1) + (s1/2) grad s1|_g`. Unchanged when the normal is flipped.
pub fn h_condition_residual(surface: &ParametricHypersurface, u: &[f64]) -> Result<f64> {
    Ok(curvature_derivatives(surface, u)?.h_defect())
}

/// H-condition residual over a grid. When `grad s1` stays below the floor
/// everywhere the pass is vacuous and annotated as such.
pub fn h_condition_report(
    surface: &ParametricHypersurface,
    grid: &[Vec<f64>],
    tolerance: f64,
) -> Result<ResidualReport> {
    let data = sweep(grid, |u| {
        let cd = curvature_derivatives(surface, u)?;
        Ok((cd.h_defect(), cd.grad_norm))
    })?;
    let values = data.iter().map(|d| d.0).collect();
    let report = ResidualReport::new("h_condition", grid.to_vec(), values, tolerance);
    if data.iter().all(|d| d.1 <= GRAD_FLOOR) {
        Ok(report.with_note("∇s1 ≈ 0"))
    } else {
        Ok(report)
    }
}

fn stencil_inside(surface: &ParametricHypersurface, u: &[f64], reach: f64) -> Result<()> {
    for axis in 0..u.len() {
        for off in [-reach, reach] {
            let mut p = u.to_vec();
            p[axis] += off;
            if !surface.contains(&p) {
                return Err(GeomError::NearPole { point: u.to_vec() });
            }
        }
    }
    Ok(())
}

/// Divergence form `(1/sqrt g) d_i (sqrt g g^{ij} d_j s1)`, with the flux
/// evaluated from exact jets and differentiated by a five-point stencil.
pub fn laplace_beltrami_s1(surface: &ParametricHypersurface, u: &[f64]) -> Result<f64> {
    laplace_beltrami_with(surface, u, H_LB, &curvature_derivatives(surface, u)?)
}

fn laplace_beltrami_with(
    surface: &ParametricHypersurface,
    u: &[f64],
    h: f64,
    base: &CurvatureDerivatives,
) -> Result<f64> {
    stencil_inside(surface, u, 2.0 * h)?;
    let n = u.len();
    let mut div = 0.0;
    for axis in 0..n {
        let flux = |p: &[f64]| -> Vec<f64> {
            match curvature_derivatives(surface, p) {
                Ok(cd) => vec![cd.geometry.metric.sqrt_det_g * cd.grad_s1[axis]],
                Err(_) => vec![f64::NAN],
            }
        };
        div += five_point(flux, u, axis, h)[0];
    }
    let value = div / base.geometry.metric.sqrt_det_g;
    if !value.is_finite() {
        return Err(GeomError::NearPole { point: u.to_vec() });
    }
    Ok(value)
}

/// Constancy scan of `lambda = s1^2 - 2 s2 + (Delta s1)/s1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Null2TypeScan {
    pub grid: Vec<Vec<f64>>,
    pub lambda_values: Vec<f64>,
    pub lambda_mean: f64,
    pub lambda_spread: f64,
    /// Smallest `|s1|` met on the grid.
    pub s1_floor: f64,
    pub tolerance: f64,
    /// `lambda_spread < tolerance`; a necessary condition only.
    pub candidate: bool,
}

pub fn null2type_lambda_scan(surface: &ParametricHypersurface, grid: &[Vec<f64>]) -> Result<Null2TypeScan> {
    let pairs = sweep(grid, |u| {
        let cd = curvature_derivatives(surface, u)?;
        let s1 = cd.geometry.s1();
        if !(s1.abs() > S1_FLOOR) {
            return Err(GeomError::MeanCurvatureVanishes { s1, point: u.to_vec() });
        }
        let (_, s2) = cd.geometry.mean_curvatures();
        let lap = laplace_beltrami_with(surface, u, H_LB, &cd)?;
        Ok((s1 * s1 - 2.0 * s2 + lap / s1, s1.abs()))
    })?;
    let lambda_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let s1_floor = pairs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let (lo, hi) = lambda_values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let lambda_spread = if lambda_values.is_empty() { 0.0 } else { hi - lo };
    let lambda_mean = if lambda_values.is_empty() {
        0.0
    } else {
        lambda_values.iter().sum::<f64>() / lambda_values.len() as f64
    };
    Ok(Null2TypeScan {
        grid: grid.to_vec(),
        lambda_values,
        lambda_mean,
        lambda_spread,
        s1_floor,
        tolerance: LAMBDA_TOL,
        candidate: lambda_spread < LAMBDA_TOL,
    })
}

/// `(|Delta s1 + s1 (s1^2 - 2 s2)|, |S(grad s1) + (s1/2) grad s1|_g)`.
pub fn biharmonic_residual(surface: &ParametricHypersurface, u: &[f64]) -> Result<(f64, f64)> {
    let cd = curvature_derivatives(surface, u)?;
    let s1 = cd.geometry.s1();
    let (_, s2) = cd.geometry.mean_curvatures();
    let lap = laplace_beltrami_with(surface, u, H_LB, &cd)?;
    Ok(((lap + s1 * (s1 * s1 - 2.0 * s2)).abs(), cd.h_defect()))
}

/// Structural data of the `grad s1` direction at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructuralPoint {
    /// Curvature of the `grad s1` direction (Rayleigh quotient of `h`).
    pub k1: f64,
    pub s1: f64,
    /// `|3 k1 + sum of the remaining curvatures| = |2 k1 + s1|`.
    pub residual: f64,
    /// `|k1 + s1/2|`.
    pub half_residual: f64,
    /// `|sin|` of the `g`-angle between `grad s1` and the closest principal eigenspace.
    pub alignment_sin: f64,
    pub grad_norm: f64,
}

pub fn structural_point(surface: &ParametricHypersurface, u: &[f64]) -> Result<StructuralPoint> {
    let cd = curvature_derivatives(surface, u)?;
    if !(cd.grad_norm > GRAD_FLOOR) {
        return Err(GeomError::GradientVanishes { norm: cd.grad_norm, point: u.to_vec() });
    }
    let grad = cd.grad_s1.clone();
    Ok(structural_from(&cd, &grad))
}

/// Same quantities with `k1` taken along a prescribed chart direction,
/// for surfaces on which `grad s1` vanishes identically.
pub fn structural_point_along(
    surface: &ParametricHypersurface,
    u: &[f64],
    direction: &DVector<f64>,
) -> Result<StructuralPoint> {
    let cd = curvature_derivatives(surface, u)?;
    Ok(structural_from(&cd, direction))
}

fn structural_from(cd: &CurvatureDerivatives, dir: &DVector<f64>) -> StructuralPoint {
    let geom = &cd.geometry;
    let len2 = geom.metric.inner(dir, dir);
    let k1 = (dir.transpose() * &geom.shape.h * dir)[(0, 0)] / len2;
    let s1 = geom.s1();
    let coeffs = geom.spectrum.eigenvectors.transpose() * &geom.metric.g * dir;
    let best = geom
        .spectrum
        .groups
        .iter()
        .map(|gr| gr.indices().map(|i| coeffs[i] * coeffs[i]).sum::<f64>())
        .fold(0.0, f64::max);
    let alignment_sin = ((len2 - best).max(0.0) / len2).sqrt();
    StructuralPoint {
        k1,
        s1,
        residual: (2.0 * k1 + s1).abs(),
        half_residual: (k1 + 0.5 * s1).abs(),
        alignment_sin,
        grad_norm: cd.grad_norm,
    }
}

/// `|3 k1 + k2 + ... + kn|` with `k1` the curvature of the `grad s1` direction.
///
/// If `grad s1` vanishes at every grid point the check is vacuous and the
/// report is annotated; a gradient vanishing at only some points is an error.
pub fn structural_identity_check(
    surface: &ParametricHypersurface,
    grid: &[Vec<f64>],
    tolerance: f64,
) -> Result<ResidualReport> {
    let points = sweep(grid, |u| {
        let cd = curvature_derivatives(surface, u)?;
        if cd.grad_norm > GRAD_FLOOR {
            let grad = cd.grad_s1.clone();
            Ok(Ok(structural_from(&cd, &grad)))
        } else {
            Ok(Err(cd.grad_norm))
        }
    })?;
    if points.iter().all(|p| p.is_err()) {
        let report = ResidualReport::new("structural_identity", grid.to_vec(), vec![0.0; grid.len()], tolerance);
        return Ok(report.with_note("∇s1 ≈ 0"));
    }
    let mut values = Vec::with_capacity(points.len());
    for (u, p) in grid.iter().zip(points) {
        match p {
            Ok(sp) => values.push(sp.residual),
            Err(norm) => return Err(GeomError::GradientVanishes { norm, point: u.clone() }),
        }
    }
    Ok(ResidualReport::new("structural_identity", grid.to_vec(), values, tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{reference_surface, ReferenceKind};

    #[test]
    fn sphere_gradient_and_laplacian_vanish() {
        let s = reference_surface(&ReferenceKind::Sphere { n: 3, radius: 1.0 }).unwrap();
        let u = [1.0, 1.2, 2.5];
        assert!(mean_curvature_gradient(&s, &u).unwrap().norm() < 1e-8);
        assert!(laplace_beltrami_s1(&s, &u).unwrap().abs() < 2e-6);
        let (normal, tangent) = biharmonic_residual(&s, &u).unwrap();
        assert!((normal - 9.0).abs() < 1e-6);
        assert!(tangent < 1e-8);
    }

    #[test]
    fn plane_is_biharmonic() {
        let s = reference_surface(&ReferenceKind::Plane { n: 3 }).unwrap();
        let u = [1.0, 2.0, 3.0];
        assert_eq!(laplace_beltrami_s1(&s, &u).unwrap(), 0.0);
        assert_eq!(biharmonic_residual(&s, &u).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn minimal_surface_blocks_lambda_scan() {
        let s = reference_surface(&ReferenceKind::Plane { n: 2 }).unwrap();
        let err = null2type_lambda_scan(&s, &[vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, GeomError::MeanCurvatureVanishes { .. }));
    }

    #[test]
    fn sweep_reports_first_error_in_grid_order() {
        let grid = vec![vec![0.0], vec![1.0], vec![2.0]];
        let r: Result<Vec<f64>> = sweep(&grid, |u| {
            if u[0] > 0.5 {
                Err(GeomError::BadParams(format!("{}", u[0])))
            } else {
                Ok(u[0])
            }
        });
        assert!(matches!(r, Err(GeomError::BadParams(m)) if m == "1"));
    }
}
