//! Regular Cartesian grids with row-major (C order) storage.

use crate::backend::BackendError;
use crate::setexpr::StateSpace;

/// Largest supported state dimension.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub periodic: bool,
}

impl GridAxis {
    /// Node spacing. Periodic axes do not duplicate the wrap-around node.
    pub fn spacing(&self) -> f64 {
        if self.periodic {
            (self.upper - self.lower) / self.count as f64
        } else {
            (self.upper - self.lower) / (self.count - 1) as f64
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.spacing()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<GridAxis>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    spacing: Vec<f64>,
    len: usize,
}

impl Grid {
    pub fn new(axes: Vec<GridAxis>) -> Result<Grid, BackendError> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(BackendError::Invalid(format!("grid dimension must be 1..={MAX_DIM}")));
        }
        for a in &axes {
            if a.count < 3 {
                return Err(BackendError::Invalid("grid needs at least 3 points per axis".into()));
            }
            if !(a.upper > a.lower) {
                return Err(BackendError::Invalid("grid axis needs lower < upper".into()));
            }
        }
        let shape: Vec<usize> = axes.iter().map(|a| a.count).collect();
        let mut strides = vec![1; shape.len()];
        for i in (0..shape.len() - 1).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let len = shape.iter().product();
        let spacing = axes.iter().map(|a| a.spacing()).collect();
        Ok(Grid {
            axes,
            shape,
            strides,
            spacing,
            len,
        })
    }

    /// A grid over the state-space box with `counts[i]` points on axis `i`.
    pub fn over(space: &StateSpace, counts: &[usize]) -> Result<Grid, BackendError> {
        if counts.len() != space.dim() {
            return Err(BackendError::Invalid(format!(
                "grid has {} axes, state space has {}",
                counts.len(),
                space.dim()
            )));
        }
        Grid::new(
            space
                .axes()
                .iter()
                .zip(counts)
                .map(|(a, &count)| GridAxis {
                    lower: a.lower,
                    upper: a.upper,
                    count,
                    periodic: a.periodic,
                })
                .collect(),
        )
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Length of the grid's bounding-box diagonal.
    pub fn diagonal(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| (a.upper - a.lower).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Writes the multi-index of flat index `flat` into `idx`.
    pub fn unravel(&self, mut flat: usize, idx: &mut [usize]) {
        for (i, s) in self.strides.iter().enumerate() {
            idx[i] = flat / s;
            flat %= s;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinates of the node at flat index `flat`.
    pub fn point(&self, flat: usize, z: &mut [f64]) {
        let mut rem = flat;
        for (i, s) in self.strides.iter().enumerate() {
            let k = rem / s;
            rem %= s;
            z[i] = self.axes[i].lower + k as f64 * self.spacing[i];
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(z)
                .all(|(a, &v)| a.periodic || (v >= a.lower && v <= a.upper))
    }

    /// Multilinear interpolation of node values at `z`; `None` outside the grid.
    pub fn interpolate(&self, values: &[f64], z: &[f64]) -> Option<f64> {
        if !self.contains(z) || values.len() != self.len {
            return None;
        }
        let d = self.dim();
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for i in 0..d {
            let a = &self.axes[i];
            let n = a.count;
            let u = (z[i] - a.lower) / self.spacing[i];
            if a.periodic {
                let u = u.rem_euclid(n as f64);
                let k = (u.floor() as usize).min(n - 1);
                lo[i] = k;
                hi[i] = (k + 1) % n;
                frac[i] = u - k as f64;
            } else {
                let k = (u.floor().max(0.0) as usize).min(n - 2);
                lo[i] = k;
                hi[i] = k + 1;
                frac[i] = (u - k as f64).clamp(0.0, 1.0);
            }
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0;
            for i in 0..d {
                if corner >> i & 1 == 1 {
                    w *= frac[i];
                    flat += hi[i] * self.strides[i];
                } else {
                    w *= 1.0 - frac[i];
                    flat += lo[i] * self.strides[i];
                }
            }
            if w != 0.0 {
                acc += w * values[flat];
            }
        }
        Some(acc)
    }
}
