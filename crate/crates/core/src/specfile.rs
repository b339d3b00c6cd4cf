//! JSON specification files: state space, horizon, propositions, formula and
//! per-backend settings.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{parse, Formula, Fragment, SyntaxError};
use crate::hj::dynamics::{Bicycle, DoubleIntegrator, HjDynamics};
use crate::hj::{HjBackend, HjConfig};
use crate::hz::{HzBackend, HzConfig, LinearSystem};
use crate::setexpr::{PropositionMap, SetExpr, SetExprError, StateSpace};
use crate::BackendError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub t0: f64,
    pub tf: f64,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_cap() -> usize {
    20
}

fn wheelbase() -> f64 {
    Bicycle::default().wheelbase
}

fn a_min() -> f64 {
    Bicycle::default().a_min
}

fn a_max() -> f64 {
    Bicycle::default().a_max
}

fn delta_max() -> f64 {
    Bicycle::default().delta_max
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HjDynamicsSpec {
    DoubleIntegrator {
        a_max: f64,
    },
    Bicycle {
        #[serde(default = "wheelbase")]
        wheelbase: f64,
        #[serde(default = "a_min")]
        a_min: f64,
        #[serde(default = "a_max")]
        a_max: f64,
        #[serde(default = "delta_max")]
        delta_max: f64,
    },
}

impl HjDynamicsSpec {
    pub fn build(&self) -> Arc<dyn HjDynamics> {
        match *self {
            HjDynamicsSpec::DoubleIntegrator { a_max } => Arc::new(DoubleIntegrator { a_max }),
            HjDynamicsSpec::Bicycle { wheelbase, a_min, a_max, delta_max } => Arc::new(Bicycle {
                wheelbase,
                a_min,
                a_max,
                delta_max,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjSpec {
    pub dynamics: HjDynamicsSpec,
    pub grid: Vec<usize>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_slices: Option<usize>,
    /// Alternative, finer grid selected on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_grid: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HzDynamicsSpec {
    DoubleIntegrator {
        a_max: f64,
    },
    /// Continuous-time `A`, `B`, discretized with zero-order hold.
    ContinuousLinear {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        u_lower: Vec<f64>,
        u_upper: Vec<f64>,
    },
    DiscreteLinear {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        u_lower: Vec<f64>,
        u_upper: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HzSpec {
    pub dynamics: HzDynamicsSpec,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_cap")]
    pub binary_cap: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Backends {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hj: Option<HjSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hz: Option<HzSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub state_space: StateSpace,
    pub horizon: Horizon,
    pub fragment: Fragment,
    pub propositions: BTreeMap<String, SetExpr>,
    pub formula: String,
    #[serde(default)]
    pub backends: Backends,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read spec: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed spec JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("formula: {0}")]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Set(#[from] SetExprError),
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error("backend configuration: {0}")]
    Backend(#[from] BackendError),
}

/// A validated specification.
#[derive(Debug, Clone)]
pub struct Spec {
    pub file: SpecFile,
    pub formula: Formula,
    pub propositions: PropositionMap,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, SpecError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(SpecError::Invalid(format!("matrix `{what}` has ragged rows")));
    }
    Ok(DMatrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

impl Spec {
    pub fn load(path: impl AsRef<Path>) -> Result<Spec, SpecError> {
        let text = std::fs::read_to_string(path)?;
        Spec::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Spec, SpecError> {
        let file: SpecFile = serde_json::from_str(text)?;
        Spec::from_file(file)
    }

    pub fn from_file(file: SpecFile) -> Result<Spec, SpecError> {
        let Horizon { t0, tf } = file.horizon;
        if !(t0.is_finite() && tf.is_finite() && tf > t0) {
            return Err(SpecError::Invalid("horizon needs finite t0 < tf".into()));
        }
        let formula = parse(&file.formula)?;
        if let Some(bad) = formula.first_outside(file.fragment) {
            return Err(SpecError::Invalid(format!(
                "subformula `{bad}` is outside the declared fragment {}",
                file.fragment
            )));
        }
        let mut propositions = PropositionMap::new();
        for (name, expr) in &file.propositions {
            propositions = propositions.bind(name, expr.clone())?;
        }
        propositions.validate(&file.state_space, (t0, tf))?;
        for p in formula.free_propositions() {
            if !propositions.contains(&p) {
                return Err(SetExprError::UnboundProposition(p).into());
            }
        }
        if let Some(hz) = &file.backends.hz {
            if (hz.steps as f64 * hz.dt - (tf - t0)).abs() > 1e-9 * (1.0 + (tf - t0).abs()) {
                return Err(SpecError::Invalid(format!(
                    "hz steps * dt = {} does not cover the horizon of {}",
                    hz.steps as f64 * hz.dt,
                    tf - t0
                )));
            }
        }
        Ok(Spec { file, formula, propositions })
    }

    pub fn horizon(&self) -> (f64, f64) {
        (self.file.horizon.t0, self.file.horizon.tf)
    }

    pub fn space(&self) -> &StateSpace {
        &self.file.state_space
    }

    pub fn hj_backend(&self, full_grid: bool) -> Result<HjBackend, SpecError> {
        let hj = self
            .file
            .backends
            .hj
            .as_ref()
            .ok_or_else(|| SpecError::Invalid("spec has no hj backend settings".into()))?;
        let grid = if full_grid {
            hj.full_grid
                .clone()
                .ok_or_else(|| SpecError::Invalid("spec has no full_grid".into()))?
        } else {
            hj.grid.clone()
        };
        let config = HjConfig {
            grid,
            cfl: hj.cfl,
            max_slices: hj.max_slices,
        };
        Ok(HjBackend::new(self.space().clone(), hj.dynamics.build(), self.horizon(), &config)?)
    }

    pub fn hz_backend(&self) -> Result<HzBackend, SpecError> {
        let hz = self
            .file
            .backends
            .hz
            .as_ref()
            .ok_or_else(|| SpecError::Invalid("spec has no hz backend settings".into()))?;
        let system = match &hz.dynamics {
            HzDynamicsSpec::DoubleIntegrator { a_max } => LinearSystem::double_integrator(*a_max, hz.dt)?,
            HzDynamicsSpec::ContinuousLinear { a, b, u_lower, u_upper } => LinearSystem::zoh(
                &matrix(a, "a")?,
                &matrix(b, "b")?,
                hz.dt,
                u_lower.clone(),
                u_upper.clone(),
            )?,
            HzDynamicsSpec::DiscreteLinear { a, b, u_lower, u_upper } => LinearSystem::new(
                matrix(a, "a")?,
                matrix(b, "b")?,
                hz.dt,
                u_lower.clone(),
                u_upper.clone(),
            )?,
        };
        let config = HzConfig {
            dt: hz.dt,
            steps: hz.steps,
            binary_cap: hz.binary_cap,
        };
        Ok(HzBackend::new(self.space().clone(), system, self.file.horizon.t0, &config)?)
    }
}
