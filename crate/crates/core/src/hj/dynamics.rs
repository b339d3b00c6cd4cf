//! Dynamics for the level-set solver.
//!
//! The Hamiltonian is `H(z, p) = min_u p·f(z, u)` in [`Mode::Exists`] and
//! `max_u p·f(z, u)` in [`Mode::Forall`]. Shipped models use closed-form
//! optimal controls; [`SampledDynamics`] scans a control grid instead.

use std::fmt;
use std::sync::Arc;

/// Whether the control cooperates (reach) or is adversarial (avoid).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exists,
    Forall,
}

pub trait HjDynamics: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn hamiltonian(&self, z: &[f64], p: &[f64], mode: Mode) -> f64;
    /// Writes bounds `alpha[i] >= max_u |f_i(z, u)|`.
    fn dissipation(&self, z: &[f64], alpha: &mut [f64]);
}

/// `x' = v`, `v' = u`, `|u| <= a_max`; state order `(x, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleIntegrator {
    pub a_max: f64,
}

impl HjDynamics for DoubleIntegrator {
    fn name(&self) -> &str {
        "double_integrator"
    }

    fn dim(&self) -> usize {
        2
    }

    fn hamiltonian(&self, z: &[f64], p: &[f64], mode: Mode) -> f64 {
        let drift = p[0] * z[1];
        match mode {
            Mode::Exists => drift - self.a_max * p[1].abs(),
            Mode::Forall => drift + self.a_max * p[1].abs(),
        }
    }

    fn dissipation(&self, z: &[f64], alpha: &mut [f64]) {
        alpha[0] = z[1].abs();
        alpha[1] = self.a_max;
    }
}

/// Kinematic bicycle, state `(x, y, theta, v)`, controls acceleration and steering angle.
///
/// `f = (v cos theta, v sin theta, v tan(delta) / L, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bicycle {
    pub wheelbase: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub delta_max: f64,
}

impl Default for Bicycle {
    fn default() -> Self {
        Bicycle {
            wheelbase: 2.9,
            a_min: -1.0,
            a_max: 1.0,
            delta_max: 0.4,
        }
    }
}

impl HjDynamics for Bicycle {
    fn name(&self) -> &str {
        "bicycle"
    }

    fn dim(&self) -> usize {
        4
    }

    fn hamiltonian(&self, z: &[f64], p: &[f64], mode: Mode) -> f64 {
        let (th, v) = (z[2], z[3]);
        let drift = p[0] * v * th.cos() + p[1] * v * th.sin();
        let steer = (p[2] * v).abs() * self.delta_max.tan() / self.wheelbase;
        let (acc_lo, acc_hi) = (p[3] * self.a_min, p[3] * self.a_max);
        match mode {
            Mode::Exists => drift - steer + acc_lo.min(acc_hi),
            Mode::Forall => drift + steer + acc_lo.max(acc_hi),
        }
    }

    fn dissipation(&self, z: &[f64], alpha: &mut [f64]) {
        let (th, v) = (z[2], z[3].abs());
        alpha[0] = v * th.cos().abs();
        alpha[1] = v * th.sin().abs();
        alpha[2] = v * self.delta_max.tan() / self.wheelbase;
        alpha[3] = self.a_min.abs().max(self.a_max.abs());
    }
}

pub type VectorField = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Arbitrary dynamics `f(z, u)` optimized by scanning a uniform control grid.
#[derive(Clone)]
pub struct SampledDynamics {
    pub name: String,
    pub dim: usize,
    pub field: VectorField,
    pub u_lower: Vec<f64>,
    pub u_upper: Vec<f64>,
    pub samples_per_axis: usize,
    controls: Vec<Vec<f64>>,
}

impl fmt::Debug for SampledDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledDynamics")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("u_lower", &self.u_lower)
            .field("u_upper", &self.u_upper)
            .field("samples_per_axis", &self.samples_per_axis)
            .finish()
    }
}

impl SampledDynamics {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        field: VectorField,
        u_lower: Vec<f64>,
        u_upper: Vec<f64>,
        samples_per_axis: usize,
    ) -> Self {
        assert_eq!(u_lower.len(), u_upper.len());
        assert!(samples_per_axis >= 2);
        let mut controls = vec![vec![]];
        for (lo, hi) in u_lower.iter().zip(&u_upper) {
            let mut next = Vec::with_capacity(controls.len() * samples_per_axis);
            for prefix in &controls {
                for k in 0..samples_per_axis {
                    let mut u = prefix.clone();
                    u.push(lo + (hi - lo) * k as f64 / (samples_per_axis - 1) as f64);
                    next.push(u);
                }
            }
            controls = next;
        }
        SampledDynamics {
            name: name.into(),
            dim,
            field,
            u_lower,
            u_upper,
            samples_per_axis,
            controls,
        }
    }
}

impl HjDynamics for SampledDynamics {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn hamiltonian(&self, z: &[f64], p: &[f64], mode: Mode) -> f64 {
        let values = self.controls.iter().map(|u| {
            let f = (self.field)(z, u);
            f.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()
        });
        match mode {
            Mode::Exists => values.fold(f64::INFINITY, f64::min),
            Mode::Forall => values.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn dissipation(&self, z: &[f64], alpha: &mut [f64]) {
        alpha[..self.dim].iter_mut().for_each(|a| *a = 0.0);
        for u in &self.controls {
            for (a, f) in alpha.iter_mut().zip((self.field)(z, u)) {
                *a = a.max(f.abs());
            }
        }
    }
}
