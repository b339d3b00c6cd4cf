//! Hamilton-Jacobi level-set backend.
//!
//! Sets are value functions sampled on a grid, negative inside. Reach and
//! avoid tubes are computed by integrating the Hamilton-Jacobi equation
//! backwards from the end of the horizon; `G` is realized as the complement of
//! the avoid tube of the complement.

pub mod dynamics;
pub mod grid;
pub mod levelset;
pub mod solver;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::{
    next_instance_id, Backend, BackendCapabilities, BackendError, Procedure, TimeModel, TimedSet,
};
use crate::formula::Fragment;
use crate::setexpr::{Interval, StateSpace};
use crate::tlt::{ApproxDir, Connective, PrimitiveSet, PrimitiveSpec};

use dynamics::HjDynamics;
use grid::Grid;
use solver::Schedule;

/// Values with `|V| <= MEMBER_TOL` count as on the boundary, hence members.
pub const MEMBER_TOL: f64 = 1e-9;

fn default_cfl() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjConfig {
    /// Grid points per state axis.
    pub grid: Vec<usize>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Overrides the number of stored time slices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_slices: Option<usize>,
}

impl HjConfig {
    pub fn new(grid: Vec<usize>) -> Self {
        HjConfig {
            grid,
            cfl: default_cfl(),
            max_slices: None,
        }
    }
}

#[derive(Debug)]
pub struct HjBackend {
    space: StateSpace,
    grid: Grid,
    dynamics: Arc<dyn HjDynamics>,
    horizon: (f64, f64),
    cfl: f64,
    schedule: Schedule,
    times: Arc<[f64]>,
    instance: u64,
}

impl HjBackend {
    pub fn new(
        space: StateSpace,
        dynamics: Arc<dyn HjDynamics>,
        horizon: (f64, f64),
        config: &HjConfig,
    ) -> Result<HjBackend, BackendError> {
        if dynamics.dim() != space.dim() {
            return Err(BackendError::Invalid(format!(
                "dynamics `{}` has dimension {}, state space has {}",
                dynamics.name(),
                dynamics.dim(),
                space.dim()
            )));
        }
        if !(config.cfl > 0.0 && config.cfl <= 1.0) {
            return Err(BackendError::Invalid("CFL number must lie in (0, 1]".into()));
        }
        let (t0, tf) = horizon;
        if !(tf > t0) {
            return Err(BackendError::Invalid("horizon needs tf > t0".into()));
        }
        let grid = Grid::over(&space, &config.grid)?;
        let dt_max = solver::stable_dt(&grid, dynamics.as_ref(), config.cfl);
        let dt_max = dt_max.min(tf - t0);
        let schedule = Schedule::new(tf - t0, dt_max, config.max_slices)?;
        let last = (schedule.slices - 1) as f64;
        let times: Arc<[f64]> = (0..schedule.slices)
            .map(|k| if k == schedule.slices - 1 { tf } else { t0 + (tf - t0) * k as f64 / last })
            .collect();
        Ok(HjBackend {
            space,
            grid,
            dynamics,
            horizon,
            cfl: config.cfl,
            schedule,
            times,
            instance: next_instance_id(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn horizon(&self) -> (f64, f64) {
        self.horizon
    }

    pub fn dynamics(&self) -> &Arc<dyn HjDynamics> {
        &self.dynamics
    }

    /// Primitive semantics of this backend: `LTL` without `X`, every argument accepts
    /// approximate temporal children.
    pub fn primitive_set() -> PrimitiveSet {
        use Procedure::*;
        let exact = |procs: &[Procedure], n: usize| PrimitiveSpec::new(procs, ApproxDir::Exact, &vec![true; n]);
        let mut p = BTreeMap::new();
        p.insert(Connective::Top, exact(&[Full], 0));
        p.insert(Connective::Prop, exact(&[MakeBox], 0));
        p.insert(Connective::Not, exact(&[Complement], 1));
        p.insert(Connective::And, exact(&[Intersect], 2));
        p.insert(Connective::Or, exact(&[Union], 2));
        p.insert(Connective::Until, exact(&[Reach], 2));
        p.insert(Connective::Eventually, exact(&[Reach, Full], 1));
        p.insert(Connective::Always, exact(&[Avoid, Complement], 1));
        PrimitiveSet {
            name: "hj".into(),
            fragment: Fragment::LtlNoNext,
            requires_nnf: false,
            eventually_via_until: true,
            primitives: p,
        }
    }

    fn slices(&self, s: &TimedSet<Vec<f64>>) -> Result<Vec<Arc<Vec<f64>>>, BackendError> {
        if s.times()[..] != self.times[..] {
            return Err(BackendError::HorizonMismatch);
        }
        Ok(s.slices().to_vec())
    }
}

impl Backend for HjBackend {
    type Slice = Vec<f64>;

    fn id(&self) -> &'static str {
        "hj"
    }

    fn instance(&self) -> u64 {
        self.instance
    }

    fn capabilities(&self) -> BackendCapabilities {
        use Procedure::*;
        let procedures = [
            Complement, Intersect, Union, Reach, Avoid, Empty, Member, MakeBox, MakeHalfspace, Full, EmptySet,
        ];
        BackendCapabilities {
            procedures: procedures.into_iter().collect(),
            time_model: TimeModel::Continuous,
            directions: procedures.into_iter().map(|p| (p, ApproxDir::Exact)).collect(),
            share_safe: true,
        }
    }

    fn primitives(&self) -> PrimitiveSet {
        HjBackend::primitive_set()
    }

    fn space(&self) -> &StateSpace {
        &self.space
    }

    fn times(&self) -> &Arc<[f64]> {
        &self.times
    }

    fn full(&self) -> Result<Vec<f64>, BackendError> {
        Ok(levelset::full(&self.grid))
    }

    fn empty_set(&self) -> Result<Vec<f64>, BackendError> {
        Ok(levelset::empty(&self.grid))
    }

    fn make_box(&self, bounds: &[Interval]) -> Result<Vec<f64>, BackendError> {
        levelset::box_sdf(&self.grid, bounds)
    }

    fn make_halfspace(&self, normal: &[f64], offset: f64) -> Result<Vec<f64>, BackendError> {
        levelset::halfspace_sdf(&self.grid, normal, offset)
    }

    fn complement(&self, s: &Vec<f64>) -> Result<Vec<f64>, BackendError> {
        Ok(levelset::complement(s))
    }

    fn intersect(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<Vec<f64>, BackendError> {
        levelset::intersect(a, b)
    }

    fn union(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<Vec<f64>, BackendError> {
        levelset::union(a, b)
    }

    fn is_empty(&self, s: &Vec<f64>) -> Result<bool, BackendError> {
        Ok(!s.iter().any(|&v| v <= MEMBER_TOL))
    }

    fn contains(&self, s: &Vec<f64>, z: &[f64]) -> Result<bool, BackendError> {
        let v = self.grid.interpolate(s, z).ok_or(BackendError::OutOfDomain)?;
        Ok(v <= MEMBER_TOL)
    }

    fn reach(
        &self,
        target: &TimedSet<Vec<f64>>,
        constraint: &TimedSet<Vec<f64>>,
    ) -> Result<TimedSet<Vec<f64>>, BackendError> {
        let out = solver::reach(
            &self.grid,
            self.dynamics.as_ref(),
            &self.schedule,
            &self.slices(target)?,
            &self.slices(constraint)?,
            self.cfl,
        )?;
        Ok(TimedSet::new(self.times.clone(), out))
    }

    fn avoid(&self, target: &TimedSet<Vec<f64>>) -> Result<TimedSet<Vec<f64>>, BackendError> {
        let out = solver::avoid(
            &self.grid,
            self.dynamics.as_ref(),
            &self.schedule,
            &self.slices(target)?,
            self.cfl,
        )?;
        Ok(TimedSet::new(self.times.clone(), out))
    }

    fn always(&self, constraint: &TimedSet<Vec<f64>>) -> Result<TimedSet<Vec<f64>>, BackendError> {
        let outside = self.complement_timed(constraint)?;
        let forced_out = self.avoid(&outside)?;
        self.complement_timed(&forced_out)
    }

    fn metrics(&self, _s: &TimedSet<Vec<f64>>) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("grid_cells".into(), self.grid.len() as f64);
        m.insert("steps".into(), self.schedule.steps as f64);
        m.insert("dt".into(), self.schedule.dt);
        m.insert("stored_slices".into(), self.schedule.slices as f64);
        m
    }
}
