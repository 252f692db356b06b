//! Principal frames, connection forms and the Codazzi identities.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{curvature_derivatives, stencil_inside, sweep, CurvatureDerivatives};
use crate::error::{GeomError, Result};
use crate::geometry::{point_geometry, CurvatureSpectrum, MetricTensor};
use crate::linalg::inv_sqrt_spd;
use crate::report::ResidualReport;
use crate::surface::{try_five_point, try_seven_point, ParametricHypersurface};
use crate::tolerances::{GRAD_FLOOR, H_FRAME};

/// `omega[i][j][l] = <nabla_{e_l} e_i, e_j>` in the principal frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionForms {
    pub n: usize,
    pub omega: Vec<f64>,
}

impl ConnectionForms {
    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.omega[(i * self.n + j) * self.n + l]
    }

    /// `max |omega_ij(e_l) + omega_ji(e_l)|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    worst = worst.max((self.get(i, j, l) + self.get(j, i, l)).abs());
                }
            }
        }
        worst
    }
}

/// Frame at a nearby point, matched group by group to `base`: each base
/// vector is `g`-projected onto the neighbour's eigenspace and the block is
/// made `g`-orthonormal by symmetric (Loewdin) orthogonalisation.
fn aligned_frame(
    surface: &ParametricHypersurface,
    u: &[f64],
    base: &CurvatureSpectrum,
) -> Result<DMatrix<f64>> {
    let pg = point_geometry(surface, u, 2)?;
    if pg.spectrum.multiplicities() != base.multiplicities() {
        return Err(GeomError::UnstableFrame {
            reason: format!(
                "multiplicities change from {:?} to {:?} near {:?}",
                base.multiplicities(),
                pg.spectrum.multiplicities(),
                u
            ),
        });
    }
    let g = &pg.metric.g;
    let n = u.len();
    let mut out = DMatrix::zeros(n, n);
    for group in &base.groups {
        let r = group.indices();
        let w = pg.spectrum.eigenvectors.columns(group.start, group.multiplicity);
        let vb = base.eigenvectors.columns(group.start, group.multiplicity);
        let p = &w * (w.transpose() * g * vb);
        let gram = p.transpose() * g * &p;
        let isq = inv_sqrt_spd(&gram).ok_or_else(|| GeomError::UnstableFrame {
            reason: format!("eigenspace rotates out of reach near {u:?}"),
        })?;
        let block = p * isq;
        for (c, col) in r.enumerate() {
            out.set_column(col, &block.column(c));
        }
    }
    Ok(out)
}

fn connection_from(
    surface: &ParametricHypersurface,
    u: &[f64],
    cd: &CurvatureDerivatives,
    h: f64,
) -> Result<ConnectionForms> {
    stencil_inside(surface, u, 3.0 * h)?;
    let n = u.len();
    let geom = &cd.geometry;
    let v = &geom.spectrum.eigenvectors;
    let gv = &geom.metric.g * v;
    let jet = &geom.jet;
    let mut c = Vec::with_capacity(n);
    for m in 0..n {
        let dv = try_seven_point(
            |p| aligned_frame(surface, p, &geom.spectrum).map(|f| f.as_slice().to_vec()),
            u,
            m,
            h,
        )?;
        let dv = DMatrix::from_column_slice(n, n, &dv);
        let gamma = DMatrix::from_fn(n, n, |a, b| jet.d2[a][m].dot(&jet.d1[b]));
        c.push(dv.transpose() * &gv + v.transpose() * gamma * v);
    }
    let mut omega = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                omega[(i * n + j) * n + l] = (0..n).map(|m| v[(m, l)] * c[m][(i, j)]).sum();
            }
        }
    }
    Ok(ConnectionForms { n, omega })
}

pub fn connection_forms(surface: &ParametricHypersurface, u: &[f64]) -> Result<ConnectionForms> {
    let cd = curvature_derivatives(surface, u)?;
    connection_from(surface, u, &cd, H_FRAME)
}

/// Curvature derivatives and connection forms at one point.
#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub derivatives: CurvatureDerivatives,
    pub forms: ConnectionForms,
}

pub fn frame_analysis(surface: &ParametricHypersurface, u: &[f64]) -> Result<FrameAnalysis> {
    let derivatives = curvature_derivatives(surface, u)?;
    let forms = connection_from(surface, u, &derivatives, H_FRAME)?;
    Ok(FrameAnalysis { derivatives, forms })
}

impl FrameAnalysis {
    fn k(&self) -> &[f64] {
        &self.derivatives.geometry.spectrum.eigenvalues
    }

    pub fn spectrum(&self) -> &CurvatureSpectrum {
        &self.derivatives.geometry.spectrum
    }

    pub fn metric(&self) -> &MetricTensor {
        &self.derivatives.geometry.metric
    }

    /// Largest defect of `e_i(k_j) = omega_ij(e_j)(k_i - k_j)` and
    /// `omega_ij(e_l)(k_i - k_j) = omega_il(e_j)(k_i - k_l)`.
    pub fn codazzi_residual(&self) -> f64 {
        let k = self.k();
        let w = &self.forms;
        let n = w.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let lhs = self.derivatives.directional(i, j);
                worst = worst.max((lhs - w.get(i, j, j) * (k[i] - k[j])).abs());
                for l in 0..n {
                    if l == i || l == j {
                        continue;
                    }
                    let a = w.get(i, j, l) * (k[i] - k[j]);
                    let b = w.get(i, l, j) * (k[i] - k[l]);
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    /// Eigen index of the simple group carrying `grad s1`.
    pub fn gradient_index(&self) -> Result<usize> {
        let cd = &self.derivatives;
        if !(cd.grad_norm > GRAD_FLOOR) {
            return Err(GeomError::GradientVanishes {
                norm: cd.grad_norm,
                point: cd.geometry.jet.u.clone(),
            });
        }
        let coeffs = self.spectrum().eigenvectors.transpose() * &self.metric().g * &cd.grad_s1;
        let (idx, _) = coeffs
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, c)| if c.abs() > best.1 { (i, c.abs()) } else { best });
        let group = &self.spectrum().groups[self.spectrum().group_of(idx)];
        if group.multiplicity != 1 {
            return Err(GeomError::UnstableFrame {
                reason: "grad s1 lies in a repeated eigenspace".into(),
            });
        }
        Ok(idx)
    }

    /// Group means of `omega_{1A}(e_A)` for every group except the one of
    /// `e_1 = grad s1 / |grad s1|`; invariant under rotations inside groups.
    pub fn xi_eta(&self) -> Result<Vec<f64>> {
        let i1 = self.gradient_index()?;
        let spectrum = self.spectrum();
        let g1 = spectrum.group_of(i1);
        Ok(spectrum
            .groups
            .iter()
            .enumerate()
            .filter(|(gi, _)| *gi != g1)
            .map(|(_, gr)| {
                gr.indices().map(|a| self.forms.get(i1, a, a)).sum::<f64>() / gr.multiplicity as f64
            })
            .collect())
    }
}

pub fn codazzi_residual(surface: &ParametricHypersurface, u: &[f64]) -> Result<f64> {
    Ok(frame_analysis(surface, u)?.codazzi_residual())
}

pub fn codazzi_report(
    surface: &ParametricHypersurface,
    grid: &[Vec<f64>],
    tolerance: f64,
) -> Result<ResidualReport> {
    let values = sweep(grid, |u| codazzi_residual(surface, u))?;
    Ok(ResidualReport::new("codazzi", grid.to_vec(), values, tolerance))
}

/// Connection-form identities expected on H-hypersurfaces with three
/// distinct principal curvatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HFrameCheck {
    /// `max |omega_1x(e_1)|`.
    pub omega_1x_e1: f64,
    /// `max |omega_1x(e_y)|`, `x != y`, both different from 1.
    pub omega_1x_ey: f64,
    /// `max |omega_Aa(e_A)|, |omega_Aa(e_a)|` across the two other groups.
    pub omega_cross: f64,
    /// `max |e_A e_1(k_2)|` over the directions orthogonal to `e_1`.
    pub ea_e1_k2: f64,
}

impl HFrameCheck {
    pub fn max(&self) -> f64 {
        self.omega_1x_e1.max(self.omega_1x_ey).max(self.omega_cross).max(self.ea_e1_k2)
    }
}

/// `e_1(k)` for the curvature group at position `group` (ordered by value).
fn e1_of_group_curvature(surface: &ParametricHypersurface, u: &[f64], group: usize, mult: &[usize]) -> Result<f64> {
    let cd = curvature_derivatives(surface, u)?;
    let spectrum = &cd.geometry.spectrum;
    if spectrum.multiplicities() != mult {
        return Err(GeomError::UnstableFrame {
            reason: format!("multiplicities change near {u:?}"),
        });
    }
    if !(cd.grad_norm > GRAD_FLOOR) {
        return Err(GeomError::GradientVanishes { norm: cd.grad_norm, point: u.to_vec() });
    }
    let k = spectrum.groups[group].start;
    Ok(cd.dk[k].dot(&cd.grad_s1) / cd.grad_norm)
}

pub fn h_surface_frame_check(surface: &ParametricHypersurface, u: &[f64]) -> Result<HFrameCheck> {
    let fa = frame_analysis(surface, u)?;
    let spectrum = fa.spectrum().clone();
    if spectrum.groups.len() != 3 {
        return Err(GeomError::UnstableFrame {
            reason: format!("expected three distinct curvatures, found {:?}", spectrum.multiplicities()),
        });
    }
    let i1 = fa.gradient_index()?;
    let g1 = spectrum.group_of(i1);
    let others: Vec<usize> = (0..3).filter(|&g| g != g1).collect();
    let n = fa.forms.n;
    let w = &fa.forms;
    let mut omega_1x_e1 = 0.0_f64;
    let mut omega_1x_ey = 0.0_f64;
    for x in (0..n).filter(|&x| x != i1) {
        omega_1x_e1 = omega_1x_e1.max(w.get(i1, x, i1).abs());
        for y in (0..n).filter(|&y| y != i1 && y != x) {
            omega_1x_ey = omega_1x_ey.max(w.get(i1, x, y).abs());
        }
    }
    let mut omega_cross = 0.0_f64;
    for a_big in spectrum.groups[others[0]].indices() {
        for a in spectrum.groups[others[1]].indices() {
            omega_cross = omega_cross.max(w.get(a_big, a, a_big).abs()).max(w.get(a_big, a, a).abs());
        }
    }
    let mult = spectrum.multiplicities();
    stencil_inside(surface, u, 2.0 * H_FRAME)?;
    let mut grad_f = DVector::zeros(n);
    for m in 0..n {
        grad_f[m] = try_five_point(
            |p| e1_of_group_curvature(surface, p, others[0], &mult).map(|v| vec![v]),
            u,
            m,
            H_FRAME,
        )?[0];
    }
    let ea_e1_k2 = (0..n)
        .filter(|&a| a != i1)
        .map(|a| spectrum.eigenvectors.column(a).dot(&grad_f).abs())
        .fold(0.0, f64::max);
    Ok(HFrameCheck { omega_1x_e1, omega_1x_ey, omega_cross, ea_e1_k2 })
}
