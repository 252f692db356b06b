//! Parameter grids kept away from the chart boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::surface::{Interval, ParametricHypersurface};
use crate::tolerances::GRID_MARGIN;

/// Interval shrunk by `margin`, never by more than a quarter of its width.
pub fn shrink(iv: Interval, margin: f64) -> Interval {
    let m = margin.min(0.25 * iv.width());
    Interval::new(iv.lo + m, iv.hi - m)
}

/// `count` Chebyshev nodes of the shrunk interval, ascending.
pub fn chebyshev_nodes(iv: Interval, count: usize, margin: f64) -> Vec<f64> {
    let inner = shrink(iv, margin);
    if count == 1 {
        return vec![inner.mid()];
    }
    let half = 0.5 * inner.width();
    (0..count)
        .rev()
        .map(|k| {
            let c = (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * count) as f64).cos();
            inner.mid() + half * c / (std::f64::consts::PI / (2 * count) as f64).cos()
        })
        .collect()
}

/// Fixed off-centre value used for coordinates that a grid does not vary.
pub fn generic_value(iv: Interval, axis: usize) -> f64 {
    let frac = 0.3 + 0.4 * ((axis as f64 + 1.0) * 0.618_033_988_749_895).fract();
    iv.lo + frac * iv.width()
}

/// Tensor grid: axis `i < counts.len()` gets `counts[i]` Chebyshev nodes,
/// the remaining axes are held at [`generic_value`]. Enumeration order is
/// row-major with the first axis slowest.
pub fn tensor_grid(surface: &ParametricHypersurface, counts: &[usize]) -> Vec<Vec<f64>> {
    let domain = surface.domain();
    let axes: Vec<Vec<f64>> = domain
        .iter()
        .enumerate()
        .map(|(i, iv)| match counts.get(i) {
            Some(&c) => chebyshev_nodes(*iv, c.max(1), GRID_MARGIN),
            None => vec![generic_value(*iv, i)],
        })
        .collect();
    let mut out = vec![Vec::new()];
    for nodes in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                nodes.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// Seeded uniform sample of the shrunk parameter box.
pub fn generic_grid(surface: &ParametricHypersurface, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boxes: Vec<Interval> = surface.domain().iter().map(|iv| shrink(*iv, GRID_MARGIN)).collect();
    (0..count)
        .map(|_| boxes.iter().map(|iv| rng.gen_range(iv.lo..iv.hi)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_nodes_stay_inside_margin() {
        let iv = Interval::new(0.0, std::f64::consts::PI);
        let nodes = chebyshev_nodes(iv, 7, 0.1);
        assert_eq!(nodes.len(), 7);
        assert!((nodes[0] - 0.1).abs() < 1e-12);
        assert!((nodes[6] - (std::f64::consts::PI - 0.1)).abs() < 1e-12);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(chebyshev_nodes(iv, 1, 0.1), vec![iv.mid()]);
    }

    #[test]
    fn narrow_intervals_keep_nodes_interior() {
        let nodes = chebyshev_nodes(Interval::new(0.0, 0.2), 3, 0.1);
        assert!(nodes.iter().all(|&x| x > 0.0 && x < 0.2));
    }
}
