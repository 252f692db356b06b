//! Wavefront OBJ export of a two-parameter coordinate slice.

use bclab_core::grid::{chebyshev_nodes, generic_value};
use bclab_core::surface::ParametricHypersurface;
use bclab_core::tolerances::GRID_MARGIN;

use crate::error::{CliError, CliResult};

/// Varies chart axes 0 and 1 on a `res x res` grid, holds the others at
/// their generic values, and keeps the three ambient coordinates of largest
/// variance. Faces are quads.
pub fn obj_slice(surface: &ParametricHypersurface, res: usize) -> CliResult<String> {
    let n = surface.dim_domain();
    if n < 2 {
        return Err(CliError::Input("mesh export needs at least two parameters".into()));
    }
    let dom = surface.domain();
    let base: Vec<f64> = (0..n).map(|i| generic_value(dom[i], i)).collect();
    let a = chebyshev_nodes(dom[0], res, GRID_MARGIN);
    let b = chebyshev_nodes(dom[1], res, GRID_MARGIN);
    let mut points = Vec::with_capacity(res * res);
    for &x in &a {
        for &y in &b {
            let mut u = base.clone();
            u[0] = x;
            u[1] = y;
            points.push(surface.point(&u));
        }
    }
    let dim = points[0].len();
    let mean: Vec<f64> = (0..dim).map(|c| points.iter().map(|p| p[c]).sum::<f64>() / points.len() as f64).collect();
    let var: Vec<f64> =
        (0..dim).map(|c| points.iter().map(|p| (p[c] - mean[c]).powi(2)).sum::<f64>()).collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| var[j].total_cmp(&var[i]).then(i.cmp(&j)));
    let mut keep: Vec<usize> = order.into_iter().take(3).collect();
    keep.sort_unstable();

    let mut out = format!(
        "# {}\n# chart axes 0,1 varied; ambient coordinates {:?}\n",
        surface.name(),
        keep
    );
    for p in &points {
        let mut xyz: Vec<String> = keep.iter().map(|&c| format!("{:.16e}", p[c])).collect();
        while xyz.len() < 3 {
            xyz.push(format!("{:.16e}", 0.0));
        }
        out.push_str(&format!("v {}\n", xyz.join(" ")));
    }
    for i in 0..res - 1 {
        for j in 0..res - 1 {
            let v = |r: usize, c: usize| r * res + c + 1;
            out.push_str(&format!("f {} {} {} {}\n", v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bclab_core::factory::{reference_surface, ReferenceKind};

    #[test]
    fn sphere_slice_counts() {
        let s = reference_surface(&ReferenceKind::Sphere { n: 3, radius: 1.0 }).unwrap();
        let obj = obj_slice(&s, 5).unwrap();
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 25);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 16);
        let last = obj.lines().last().unwrap();
        assert_eq!(last, "f 19 24 25 20");
    }
}
