//! Small dense symmetric eigen-solvers.

use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalisation of a symmetric matrix.
///
/// Returns eigenvalues (unsorted, in diagonal order) and the orthogonal
/// matrix whose columns are the matching eigenvectors.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return (m.diagonal(), v);
    }
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (m.diagonal(), v)
}

/// Solves `h v = k g v` for symmetric `h` and SPD `g`.
///
/// Eigenpairs are sorted by descending eigenvalue; eigenvectors are
/// `g`-orthonormal. Returns `None` when `g` has no Cholesky factor.
pub fn generalized_symmetric_eigen(
    h: &DMatrix<f64>,
    g: &DMatrix<f64>,
) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let n = g.nrows();
    let chol = g.clone().cholesky()?;
    let l = chol.l();
    // A = L^-1 h L^-T
    let y = l.solve_lower_triangular(h)?;
    let a = l.solve_lower_triangular(&y.transpose())?;
    let a = (&a + a.transpose()) * 0.5;
    let (vals, q) = jacobi_eigen(&a);
    let vecs = l.transpose().solve_upper_triangular(&q)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = DMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    Some((sorted_vals, sorted_vecs))
}

/// Inverse square root of a symmetric positive definite matrix.
pub fn inv_sqrt_spd(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (vals, q) = jacobi_eigen(a);
    if vals.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let d = DMatrix::from_diagonal(&vals.map(|v| 1.0 / v.sqrt()));
    Some(&q * d * q.transpose())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    jacobi_eigen(a).0.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spd(seed: &[f64], n: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()] + (i == j) as u8 as f64);
        &b * b.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn diagonal_input_is_returned_unchanged() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let (vals, v) = jacobi_eigen(&a);
        assert_eq!(vals.as_slice(), &[3.0, -1.0, 2.0]);
        assert_eq!(v, DMatrix::identity(3, 3));
    }

    #[test]
    fn agrees_with_nalgebra_symmetric_eigen() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[4.0, 1.0, -2.0, 0.5, 1.0, 2.0, 0.0, 1.0, -2.0, 0.0, 3.0, -1.5, 0.5, 1.0, -1.5, -1.0],
        );
        let (vals, _) = jacobi_eigen(&a);
        let mut ours: Vec<f64> = vals.iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        let mut reference: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (x, y) in ours.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn generalized_pairs_satisfy_residual_and_g_orthonormality(
            seed in proptest::collection::vec(-1.0f64..1.0, 36),
            hseed in proptest::collection::vec(-2.0f64..2.0, 36),
            n in 2usize..=6,
        ) {
            let g = spd(&seed, n);
            let hraw = DMatrix::from_fn(n, n, |i, j| hseed[i * 6 + j]);
            let h = (&hraw + hraw.transpose()) * 0.5;
            let (vals, vecs) = generalized_symmetric_eigen(&h, &g).unwrap();
            for w in vals.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            let scale = 1.0 + h.norm() + g.norm();
            for c in 0..n {
                let v = vecs.column(c);
                let r = &h * v - &g * v * vals[c];
                prop_assert!(r.norm() < 1e-9 * scale);
            }
            let gram = vecs.transpose() * &g * &vecs;
            prop_assert!((gram - DMatrix::identity(n, n)).norm() < 1e-9);
        }
    }
}
