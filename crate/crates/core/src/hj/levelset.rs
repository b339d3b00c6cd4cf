//! Level-set slices: signed distance constructors and the pointwise set algebra.
//!
//! A slice is a vector of node values; the set it represents is the sub-zero
//! region. Complement negates, intersection takes the maximum and union the
//! minimum, so De Morgan and double complement hold bit for bit.

use rayon::prelude::*;

use super::grid::{Grid, MAX_DIM};
use crate::backend::BackendError;
use crate::setexpr::Interval;

/// Value used for the full space; its negation represents the empty set.
pub fn full(grid: &Grid) -> Vec<f64> {
    vec![-grid.diagonal(); grid.len()]
}

pub fn empty(grid: &Grid) -> Vec<f64> {
    vec![grid.diagonal(); grid.len()]
}

/// Exact signed distance to an axis-aligned box, negative inside.
///
/// Bounds at or beyond the grid extent are dropped, so a box spanning an axis
/// does not create an artificial boundary at the grid edge.
pub fn box_sdf(grid: &Grid, bounds: &[Interval]) -> Result<Vec<f64>, BackendError> {
    if bounds.len() != grid.dim() {
        return Err(BackendError::ShapeMismatch(format!(
            "box has {} axes, grid has {}",
            bounds.len(),
            grid.dim()
        )));
    }
    let active: Vec<(usize, Option<f64>, Option<f64>)> = bounds
        .iter()
        .enumerate()
        .filter_map(|(i, iv)| {
            let a = &grid.axes()[i];
            let lo = iv.lo.filter(|&v| v > a.lower);
            let hi = iv.hi.filter(|&v| v < a.upper);
            (lo.is_some() || hi.is_some()).then_some((i, lo, hi))
        })
        .collect();
    if active.is_empty() {
        return Ok(full(grid));
    }
    let d = grid.dim();
    let mut out = vec![0.0; grid.len()];
    out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(k, v)| {
        let mut z = [0.0; MAX_DIM];
        grid.point(k, &mut z[..d]);
        let mut outside = 0.0;
        let mut inside = f64::NEG_INFINITY;
        for &(i, lo, hi) in &active {
            let mut q = f64::NEG_INFINITY;
            if let Some(lo) = lo {
                q = q.max(lo - z[i]);
            }
            if let Some(hi) = hi {
                q = q.max(z[i] - hi);
            }
            if q > 0.0 {
                outside += q * q;
            }
            inside = inside.max(q);
        }
        *v = outside.sqrt() + inside.min(0.0);
    });
    Ok(out)
}

/// `(n·z - c) / |n|`, the signed distance to `{z : n·z <= c}`.
pub fn halfspace_sdf(grid: &Grid, normal: &[f64], offset: f64) -> Result<Vec<f64>, BackendError> {
    if normal.len() != grid.dim() {
        return Err(BackendError::ShapeMismatch("halfspace normal length".into()));
    }
    let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(BackendError::UnsupportedGeometry("zero halfspace normal".into()));
    }
    let d = grid.dim();
    let mut out = vec![0.0; grid.len()];
    out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(k, v)| {
        let mut z = [0.0; MAX_DIM];
        grid.point(k, &mut z[..d]);
        let dot: f64 = normal.iter().zip(&z[..d]).map(|(a, b)| a * b).sum();
        *v = (dot - offset) / norm;
    });
    Ok(out)
}

pub fn complement(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

pub fn intersect(a: &[f64], b: &[f64]) -> Result<Vec<f64>, BackendError> {
    zip_with(a, b, f64::max)
}

pub fn union(a: &[f64], b: &[f64]) -> Result<Vec<f64>, BackendError> {
    zip_with(a, b, f64::min)
}

fn zip_with(a: &[f64], b: &[f64], f: fn(f64, f64) -> f64) -> Result<Vec<f64>, BackendError> {
    if a.len() != b.len() {
        return Err(BackendError::ShapeMismatch(format!("{} vs {} nodes", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hj::grid::GridAxis;

    fn grid() -> Grid {
        Grid::new(vec![
            GridAxis { lower: -100.0, upper: 100.0, count: 201, periodic: false },
            GridAxis { lower: -10.0, upper: 10.0, count: 21, periodic: false },
        ])
        .unwrap()
    }

    fn at(g: &Grid, v: &[f64], z: [f64; 2]) -> f64 {
        g.interpolate(v, &z).unwrap()
    }

    #[test]
    fn strip_distance() {
        let g = grid();
        let strip = box_sdf(
            &g,
            &[Interval { lo: Some(-50.0), hi: Some(50.0) }, Interval { lo: None, hi: None }],
        )
        .unwrap();
        assert_eq!(at(&g, &strip, [0.0, 3.0]), -50.0);
        assert_eq!(at(&g, &strip, [60.0, -7.0]), 10.0);
        assert_eq!(at(&g, &strip, [50.0, 0.0]), 0.0);
    }

    #[test]
    fn corner_distance_is_euclidean() {
        let g = grid();
        let b = box_sdf(
            &g,
            &[Interval { lo: Some(0.0), hi: Some(10.0) }, Interval { lo: Some(0.0), hi: Some(2.0) }],
        )
        .unwrap();
        assert!((at(&g, &b, [13.0, 6.0]) - 5.0).abs() < 1e-12);
        assert_eq!(at(&g, &b, [5.0, 1.0]), -1.0);
    }

    #[test]
    fn halfspace_distance() {
        let g = grid();
        let h = halfspace_sdf(&g, &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(at(&g, &h, [17.0, 3.0]), 3.0);
        let d = halfspace_sdf(&g, &[3.0, 4.0], 5.0).unwrap();
        assert!((at(&g, &d, [0.0, 0.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_extent_box_is_full_space() {
        let g = grid();
        let b = box_sdf(
            &g,
            &[Interval { lo: Some(-100.0), hi: Some(200.0) }, Interval { lo: None, hi: None }],
        )
        .unwrap();
        assert_eq!(b, full(&g));
        let t = box_sdf(&g, &[Interval { lo: Some(-50.0), hi: Some(50.0) }, Interval { lo: None, hi: None }]).unwrap();
        assert_eq!(intersect(&t, &full(&g)).unwrap(), t);
        assert_eq!(union(&t, &empty(&g)).unwrap(), t);
    }

    #[test]
    fn algebra_on_scalars() {
        assert_eq!(complement(&[2.5]), vec![-2.5]);
        assert_eq!(intersect(&[3.0], &[-1.0]).unwrap(), vec![3.0]);
        assert_eq!(union(&[3.0], &[-1.0]).unwrap(), vec![-1.0]);
        assert!(union(&[1.0], &[1.0, 2.0]).is_err());
    }
}
