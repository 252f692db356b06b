//! First and second fundamental forms, the unit normal, the shape operator
//! and principal curvature spectra at a single chart point.
//!
//! Curvature signs are always relative to the unit normal chosen by
//! [`unit_normal`]: the generalized cross product of the ordered chart frame
//! `(x_{t_1}, ..., x_{t_n})`, multiplied by the surface orientation sign.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::linalg::generalized_symmetric_eigen;
use crate::surface::{evaluate_jet, Jet, ParametricHypersurface};
use crate::tolerances::{DET_TOL, EPS_CLUSTER_REL, RANK_TOL};

/// Induced metric `g_ij = <x_i, x_j>` with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub sqrt_det_g: f64,
}

impl MetricTensor {
    /// `g`-norm of a tangent vector given in chart components.
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    pub fn inner(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        (v.transpose() * &self.g * w)[(0, 0)]
    }

    /// Raises the index of a covector: `g^{ij} w_j`.
    pub fn raise(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.g_inv * w
    }
}

pub fn induced_metric(jet: &Jet) -> Result<MetricTensor> {
    let j = jet.jacobian();
    let g = j.transpose() * &j;
    let g = (&g + g.transpose()) * 0.5;
    let det = g.determinant();
    // det_tol applies to det g / (tr g / n)^n, which is invariant under
    // ambient rescaling and lies in [0, 1].
    let n = g.nrows() as f64;
    let scale = (g.trace() / n).powf(n);
    if !(det > DET_TOL * scale) {
        return Err(GeomError::Degenerate { det });
    }
    let chol = g.clone().cholesky().ok_or(GeomError::Degenerate { det })?;
    let g_inv = chol.inverse();
    let g_inv = (&g_inv + g_inv.transpose()) * 0.5;
    Ok(MetricTensor { g, g_inv, sqrt_det_g: det.sqrt() })
}

/// Unit normal from the cofactor expansion of `det[x_{t_1} .. x_{t_n} | e]`,
/// so that `det[x_{t_1} .. x_{t_n} | N] > 0` before the orientation sign.
pub fn unit_normal(jet: &Jet) -> Result<DVector<f64>> {
    let j = jet.jacobian();
    let m = j.nrows();
    let n = j.ncols();
    let mut normal = DVector::zeros(m);
    for k in 0..m {
        let minor = j.clone().remove_row(k);
        let sign = if (k + n) % 2 == 0 { 1.0 } else { -1.0 };
        normal[k] = sign * minor.determinant();
    }
    let len = normal.norm();
    if !(len > RANK_TOL.powi(n as i32).max(f64::MIN_POSITIVE)) {
        return Err(GeomError::RankDeficient { sigma_min: len });
    }
    Ok(normal * (jet.orientation / len))
}

/// `h_ij = <x_{t_i t_j}, N>`.
pub fn second_fundamental_form(jet: &Jet, normal: &DVector<f64>) -> DMatrix<f64> {
    assert!(jet.order >= 2, "second fundamental form needs a jet of order >= 2");
    let n = jet.dim_domain();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = jet.d2[i][j].dot(normal);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Weingarten map `S = g^{-1} h` in chart components.
pub fn shape_operator(metric: &MetricTensor, h: &DMatrix<f64>) -> DMatrix<f64> {
    &metric.g_inv * h
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeData {
    pub normal: DVector<f64>,
    pub h: DMatrix<f64>,
    pub s: DMatrix<f64>,
}

/// A cluster of (numerically) equal principal curvatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureGroup {
    pub value: f64,
    pub multiplicity: usize,
    /// Index of the first member in the sorted eigenvalue list.
    pub start: usize,
}

impl CurvatureGroup {
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.multiplicity
    }
}

/// Principal curvatures sorted descending, with `g`-orthonormal principal
/// directions (columns, chart components) and multiplicity groups.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub groups: Vec<CurvatureGroup>,
    pub eps_cluster: f64,
}

impl CurvatureSpectrum {
    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.multiplicity).collect()
    }

    /// Group index of eigen index `i`.
    pub fn group_of(&self, i: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.indices().contains(&i))
            .expect("eigen index within spectrum")
    }

    /// Smallest gap between consecutive groups, `inf` for a single group.
    pub fn min_group_gap(&self) -> f64 {
        self.groups
            .windows(2)
            .map(|w| {
                let last_of_first = self.eigenvalues[w[0].start + w[0].multiplicity - 1];
                last_of_first - self.eigenvalues[w[1].start]
            })
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn default_eps_cluster(values: &[f64]) -> f64 {
    let kmax = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    EPS_CLUSTER_REL * (1.0 + kmax)
}

/// Groups consecutive entries of a descending list whose gap is below `eps`.
pub fn cluster_sorted(values: &[f64], eps: f64) -> Vec<CurvatureGroup> {
    let mut groups: Vec<CurvatureGroup> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if values[i - 1] - v < eps => g.multiplicity += 1,
            _ => groups.push(CurvatureGroup { value: v, multiplicity: 1, start: i }),
        }
    }
    for g in &mut groups {
        g.value = values[g.indices()].iter().sum::<f64>() / g.multiplicity as f64;
    }
    groups
}

/// Solves `h v = k g v` through Cholesky reduction and Jacobi rotations.
///
/// `eps_cluster = None` selects the relative default `1e-6 (1 + max|k|)`.
pub fn principal_curvatures(
    metric: &MetricTensor,
    h: &DMatrix<f64>,
    eps_cluster: Option<f64>,
) -> Result<CurvatureSpectrum> {
    let (eigenvalues, eigenvectors) = generalized_symmetric_eigen(h, &metric.g)
        .ok_or_else(|| GeomError::Degenerate { det: metric.g.determinant() })?;
    let eps = eps_cluster.unwrap_or_else(|| default_eps_cluster(&eigenvalues));
    let groups = cluster_sorted(&eigenvalues, eps);
    Ok(CurvatureSpectrum { eigenvalues, eigenvectors, groups, eps_cluster: eps })
}

/// `(s1, s2)`: the sum of principal curvatures and their second elementary
/// symmetric polynomial.
pub fn mean_curvatures(spectrum: &CurvatureSpectrum) -> (f64, f64) {
    elementary_symmetric(&spectrum.eigenvalues)
}

pub(crate) fn elementary_symmetric(k: &[f64]) -> (f64, f64) {
    let s1: f64 = k.iter().sum();
    let mut s2 = 0.0;
    for i in 0..k.len() {
        for j in (i + 1)..k.len() {
            s2 += k[i] * k[j];
        }
    }
    (s1, s2)
}

/// All first- and second-order data at one chart point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub jet: Jet,
    pub metric: MetricTensor,
    pub shape: ShapeData,
    pub spectrum: CurvatureSpectrum,
}

impl PointGeometry {
    pub fn s1(&self) -> f64 {
        self.shape.s.trace()
    }

    pub fn mean_curvatures(&self) -> (f64, f64) {
        mean_curvatures(&self.spectrum)
    }
}

/// Evaluates the jet (order 2 or 3) and everything derived from it.
pub fn point_geometry(
    surface: &ParametricHypersurface,
    u: &[f64],
    order: usize,
) -> Result<PointGeometry> {
    let jet = evaluate_jet(surface, u, order.max(2))?;
    let metric = induced_metric(&jet)?;
    let normal = unit_normal(&jet)?;
    let h = second_fundamental_form(&jet, &normal);
    let s = shape_operator(&metric, &h);
    let spectrum = principal_curvatures(&metric, &h, None)?;
    Ok(PointGeometry { jet, metric, shape: ShapeData { normal, h, s }, spectrum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clustering_groups_consecutive_values() {
        let groups = cluster_sorted(&[2.0, 2.0 - 1e-9, 0.5, 0.0, -1e-8], 1e-6);
        let mult: Vec<usize> = groups.iter().map(|g| g.multiplicity).collect();
        assert_eq!(mult, vec![2, 1, 2]);
        assert_eq!(groups[2].start, 3);
    }

    #[test]
    fn mean_curvatures_of_simple_spectra() {
        assert_eq!(elementary_symmetric(&[1.0, 1.0, 1.0]), (3.0, 3.0));
        assert_eq!(elementary_symmetric(&[2.0, 0.0, 0.0]), (2.0, 0.0));
    }

    proptest! {
        #[test]
        fn trace_of_square_identity(a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0) {
            let (s1, s2) = elementary_symmetric(&[a, b, c]);
            let brute = a * a + b * b + c * c;
            prop_assert!((s1 * s1 - 2.0 * s2 - brute).abs() < 1e-12 * (1.0 + brute));
        }
    }
}
