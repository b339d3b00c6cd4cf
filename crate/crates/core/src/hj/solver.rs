//! Explicit time integration of the Hamilton-Jacobi equations.
//!
//! Time runs backwards: `s = tf - t` is the remaining horizon and the value
//! function obeys `dV/ds = H(z, grad V)`. Spatial derivatives are central
//! differences with Lax-Friedrichs dissipation scaled by the local bound
//! `alpha_i(z)`, integrated with forward Euler. Ghost nodes beyond a
//! non-periodic boundary are extrapolated linearly.

use std::sync::Arc;

use rayon::prelude::*;

use super::dynamics::{HjDynamics, Mode};
use super::grid::{Grid, MAX_DIM};
use crate::backend::BackendError;

/// Default number of stored slices when the step count exceeds [`FULL_STORAGE_STEPS`].
pub const DECIMATED_SLICES: usize = 256;
/// Horizons needing at most this many steps store every step.
pub const FULL_STORAGE_STEPS: usize = 1000;

/// Time-step layout of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub steps: usize,
    pub dt: f64,
    /// Steps between stored slices.
    pub stride: usize,
    pub slices: usize,
}

impl Schedule {
    /// Chooses a step count with `dt <= dt_max` covering `horizon` exactly.
    pub fn new(horizon: f64, dt_max: f64, max_slices: Option<usize>) -> Result<Schedule, BackendError> {
        if !(horizon > 0.0 && dt_max > 0.0 && dt_max.is_finite()) {
            return Err(BackendError::Invalid("horizon and time step must be positive".into()));
        }
        let min_steps = ((horizon / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let want = match max_slices {
            Some(s) => s.max(2),
            None if min_steps <= FULL_STORAGE_STEPS => min_steps + 1,
            None => DECIMATED_SLICES,
        };
        let (steps, stride, slices) = if want >= min_steps + 1 {
            (min_steps, 1, min_steps + 1)
        } else {
            let stride = min_steps.div_ceil(want - 1);
            (stride * (want - 1), stride, want)
        };
        Ok(Schedule {
            steps,
            dt: horizon / steps as f64,
            stride,
            slices,
        })
    }

    /// Stored slice index (ascending in forward time) for step `n`.
    pub fn slice_of_step(&self, n: usize) -> usize {
        let back = (n + self.stride / 2) / self.stride;
        self.slices - 1 - back.min(self.slices - 1)
    }
}

/// Largest `dt` with `dt * max_z sum_i alpha_i(z) / dx_i <= cfl`.
pub fn stable_dt(grid: &Grid, dynamics: &dyn HjDynamics, cfl: f64) -> f64 {
    let rate = max_rate(grid, dynamics);
    if rate > 0.0 {
        cfl / rate
    } else {
        f64::INFINITY
    }
}

fn max_rate(grid: &Grid, dynamics: &dyn HjDynamics) -> f64 {
    let d = grid.dim();
    (0..grid.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|k| {
            let mut z = [0.0; MAX_DIM];
            let mut alpha = [0.0; MAX_DIM];
            grid.point(k, &mut z[..d]);
            dynamics.dissipation(&z[..d], &mut alpha[..d]);
            (0..d).map(|i| alpha[i] / grid.spacing()[i]).sum::<f64>()
        })
        .reduce(|| 0.0, f64::max)
}

/// One forward Euler step of `dV/ds = H` with Lax-Friedrichs dissipation.
pub fn step_hjb(
    grid: &Grid,
    dynamics: &dyn HjDynamics,
    v: &[f64],
    mode: Mode,
    dt: f64,
    cfl: f64,
) -> Result<Vec<f64>, BackendError> {
    if v.len() != grid.len() {
        return Err(BackendError::ShapeMismatch("value array does not match grid".into()));
    }
    let d = grid.dim();
    let strides = grid.strides();
    let shape = grid.shape();
    let spacing = grid.spacing();
    let periodic: Vec<bool> = grid.axes().iter().map(|a| a.periodic).collect();
    let mut out = vec![0.0; v.len()];
    let ratio = out
        .par_iter_mut()
        .enumerate()
        .with_min_len(512)
        .map(|(k, o)| {
            let mut idx = [0usize; MAX_DIM];
            let mut z = [0.0; MAX_DIM];
            let mut p = [0.0; MAX_DIM];
            let mut alpha = [0.0; MAX_DIM];
            let mut diff = [0.0; MAX_DIM];
            grid.unravel(k, &mut idx[..d]);
            grid.point(k, &mut z[..d]);
            let c = v[k];
            for i in 0..d {
                let s = strides[i];
                let n = shape[i];
                let (left, right) = if periodic[i] {
                    let l = if idx[i] == 0 { v[k + (n - 1) * s] } else { v[k - s] };
                    let r = if idx[i] == n - 1 { v[k - (n - 1) * s] } else { v[k + s] };
                    (l, r)
                } else {
                    let r = if idx[i] + 1 < n { v[k + s] } else { 2.0 * c - v[k - s] };
                    let l = if idx[i] > 0 { v[k - s] } else { 2.0 * c - v[k + s] };
                    (l, r)
                };
                let pm = (c - left) / spacing[i];
                let pp = (right - c) / spacing[i];
                p[i] = 0.5 * (pm + pp);
                diff[i] = 0.5 * (pp - pm);
            }
            let h = dynamics.hamiltonian(&z[..d], &p[..d], mode);
            dynamics.dissipation(&z[..d], &mut alpha[..d]);
            let mut visc = 0.0;
            let mut rate = 0.0;
            for i in 0..d {
                visc += alpha[i] * diff[i];
                rate += alpha[i] / spacing[i];
            }
            *o = c + dt * (h + visc);
            rate
        })
        .reduce(|| 0.0, f64::max);
    if dt * ratio > cfl * (1.0 + 1e-12) {
        return Err(BackendError::CflViolation {
            ratio: dt * ratio,
            limit: cfl,
        });
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(BackendError::NonFinite { step: 0 });
    }
    Ok(out)
}

/// Value slices ordered by stored slice index, which ascends in forward time.
pub type Slices = Vec<Arc<Vec<f64>>>;

fn all_shared(s: &[Arc<Vec<f64>>]) -> bool {
    s.windows(2).all(|w| Arc::ptr_eq(&w[0], &w[1]))
}

fn tag_step(e: BackendError, n: usize) -> BackendError {
    match e {
        BackendError::NonFinite { .. } => BackendError::NonFinite { step: n },
        other => other,
    }
}

/// Reachable tube: states that can enter `target` within the remaining horizon
/// while staying inside `constraint`.
///
/// `target` and `constraint` hold one slice per stored instant; each step uses
/// the slice nearest its time. When both are time-invariant the tube is also
/// clamped to be monotone in the remaining horizon.
pub fn reach(
    grid: &Grid,
    dynamics: &dyn HjDynamics,
    sched: &Schedule,
    target: &[Arc<Vec<f64>>],
    constraint: &[Arc<Vec<f64>>],
    cfl: f64,
) -> Result<Slices, BackendError> {
    check_lengths(sched, target)?;
    check_lengths(sched, constraint)?;
    let tube = all_shared(target) && all_shared(constraint);
    let last = sched.slices - 1;
    let mut v: Vec<f64> = target[last]
        .iter()
        .zip(constraint[last].iter())
        .map(|(&t, &c)| t.max(c))
        .collect();
    let mut out: Vec<Option<Arc<Vec<f64>>>> = vec![None; sched.slices];
    out[last] = Some(Arc::new(v.clone()));
    for n in 1..=sched.steps {
        let k = sched.slice_of_step(n);
        let mut next = step_hjb(grid, dynamics, &v, Mode::Exists, sched.dt, cfl).map_err(|e| tag_step(e, n))?;
        let (t, c) = (&target[k], &constraint[k]);
        for i in 0..next.len() {
            let mut x = next[i].min(t[i]);
            if tube {
                x = x.min(v[i]);
            }
            next[i] = x.max(c[i]);
        }
        v = next;
        if n % sched.stride == 0 {
            out[k] = Some(Arc::new(v.clone()));
        }
    }
    Ok(out.into_iter().map(|s| s.expect("every slice stored")).collect())
}

/// Inevitability tube: states driven into `target` within the remaining horizon
/// whatever the control does.
pub fn avoid(
    grid: &Grid,
    dynamics: &dyn HjDynamics,
    sched: &Schedule,
    target: &[Arc<Vec<f64>>],
    cfl: f64,
) -> Result<Slices, BackendError> {
    check_lengths(sched, target)?;
    let tube = all_shared(target);
    let last = sched.slices - 1;
    let mut v: Vec<f64> = target[last].to_vec();
    let mut out: Vec<Option<Arc<Vec<f64>>>> = vec![None; sched.slices];
    out[last] = Some(target[last].clone());
    for n in 1..=sched.steps {
        let k = sched.slice_of_step(n);
        let mut next = step_hjb(grid, dynamics, &v, Mode::Forall, sched.dt, cfl).map_err(|e| tag_step(e, n))?;
        let t = &target[k];
        for i in 0..next.len() {
            let mut x = next[i].min(t[i]);
            if tube {
                x = x.min(v[i]);
            }
            next[i] = x;
        }
        v = next;
        if n % sched.stride == 0 {
            out[k] = Some(Arc::new(v.clone()));
        }
    }
    Ok(out.into_iter().map(|s| s.expect("every slice stored")).collect())
}

fn check_lengths(sched: &Schedule, s: &[Arc<Vec<f64>>]) -> Result<(), BackendError> {
    if s.len() != sched.slices {
        return Err(BackendError::HorizonMismatch);
    }
    Ok(())
}
