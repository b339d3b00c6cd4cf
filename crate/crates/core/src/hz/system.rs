//! Discrete-time linear systems `z+ = A z + B u` with box-bounded inputs, and
//! the predecessor operator.

use nalgebra::DMatrix;

use super::zonotope::HybridZonotope;
use crate::backend::BackendError;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub dt: f64,
    pub u_lower: Vec<f64>,
    pub u_upper: Vec<f64>,
}

impl LinearSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        dt: f64,
        u_lower: Vec<f64>,
        u_upper: Vec<f64>,
    ) -> Result<Self, BackendError> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n {
            return Err(BackendError::ShapeMismatch("A must be square and B must have as many rows".into()));
        }
        if u_lower.len() != b.ncols() || u_upper.len() != b.ncols() {
            return Err(BackendError::ShapeMismatch("input bounds must match the columns of B".into()));
        }
        if !(dt > 0.0) {
            return Err(BackendError::Invalid("time step must be positive".into()));
        }
        if u_lower.iter().zip(&u_upper).any(|(l, h)| !(l <= h)) {
            return Err(BackendError::Invalid("input bounds need lower <= upper".into()));
        }
        Ok(LinearSystem { a, b, dt, u_lower, u_upper })
    }

    /// Zero-order-hold discretization of `z' = Ac z + Bc u`.
    pub fn zoh(
        ac: &DMatrix<f64>,
        bc: &DMatrix<f64>,
        dt: f64,
        u_lower: Vec<f64>,
        u_upper: Vec<f64>,
    ) -> Result<Self, BackendError> {
        let (n, m) = (ac.nrows(), bc.ncols());
        if ac.ncols() != n || bc.nrows() != n {
            return Err(BackendError::ShapeMismatch("continuous A must be square, B must match".into()));
        }
        let mut aug = DMatrix::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(ac);
        aug.view_mut((0, n), (n, m)).copy_from(bc);
        let e = expm(&(aug * dt));
        LinearSystem::new(
            e.view((0, 0), (n, n)).into_owned(),
            e.view((0, n), (n, m)).into_owned(),
            dt,
            u_lower,
            u_upper,
        )
    }

    /// `x' = v`, `v' = u`, `|u| <= a_max`, discretized with zero-order hold.
    pub fn double_integrator(a_max: f64, dt: f64) -> Result<Self, BackendError> {
        let ac = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let bc = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        LinearSystem::zoh(&ac, &bc, dt, vec![-a_max], vec![a_max])
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_set(&self) -> Result<HybridZonotope, BackendError> {
        HybridZonotope::from_box(&self.u_lower, &self.u_upper)
    }

    /// `{z in C : exists u in U, A z + B u in T}`.
    ///
    /// Built by intersecting `C x U` with `T` under `[A B]` and projecting onto `z`,
    /// so `A` need not be invertible.
    pub fn pred(&self, target: &HybridZonotope, constraint: &HybridZonotope) -> Result<HybridZonotope, BackendError> {
        let n = self.dim();
        if target.dim() != n || constraint.dim() != n {
            return Err(BackendError::ShapeMismatch("sets must match the system dimension".into()));
        }
        if target.is_trivially_empty() || constraint.is_trivially_empty() {
            return Ok(HybridZonotope::empty(n));
        }
        let m = self.b.ncols();
        let lifted = constraint.cartesian(&self.input_set()?)?;
        let mut r = DMatrix::zeros(n, n + m);
        r.view_mut((0, 0), (n, n)).copy_from(&self.a);
        r.view_mut((0, n), (n, m)).copy_from(&self.b);
        let joined = lifted.gen_intersect(target, &r)?;
        let mut proj = DMatrix::zeros(n, n + m);
        proj.view_mut((0, 0), (n, n)).fill_with_identity();
        Ok(joined.linear_map(&proj)?.prune())
    }
}

/// Matrix exponential by a 20-term Taylor series with scaling and squaring.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = m * scale;
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &x / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoh_of_double_integrator_matches_closed_form() {
        for dt in [0.1, 0.5, 2.0] {
            let s = LinearSystem::double_integrator(1.0, dt).unwrap();
            let a = DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
            let b = DMatrix::from_row_slice(2, 1, &[dt * dt / 2.0, dt]);
            assert!((&s.a - a).amax() < 1e-14);
            assert!((&s.b - b).amax() < 1e-14);
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -3.0, 3.0, 0.0]);
        let e = expm(&m);
        let want = DMatrix::from_row_slice(2, 2, &[3f64.cos(), -3f64.sin(), 3f64.sin(), 3f64.cos()]);
        assert!((e - want).amax() < 1e-12);
    }

    #[test]
    fn predecessor_examples() {
        let s = LinearSystem::double_integrator(1.0, 0.5).unwrap();
        let state = HybridZonotope::from_box(&[-100.0, -10.0], &[100.0, 10.0]).unwrap();
        let p = s.pred(&state, &state).unwrap();
        assert!(!p.contains(&[100.0, 10.0], 20).unwrap());
        assert!(p.contains(&[0.0, 0.0], 20).unwrap());
        assert_eq!((p.n_g(), p.n_c()), (5, 2));
        assert!(s.pred(&HybridZonotope::empty(2), &state).unwrap().is_empty(20).unwrap());
    }
}
