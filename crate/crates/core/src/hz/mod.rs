//! Hybrid zonotope backend for discrete-time linear dynamics.
//!
//! Time is indexed by steps `j = 0..=N` at `t0 + j dt`. Temporal operators are
//! computed by backward recursion over predecessor sets, which are declared
//! under-approximations. Complement is only available for geometric leaves,
//! so formulas are put in negation normal form before construction.

pub mod lp;
pub mod system;
pub mod zonotope;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::{
    next_instance_id, Backend, BackendCapabilities, BackendError, Procedure, TimeModel, TimedSet,
};
use crate::formula::Fragment;
use crate::setexpr::{Interval, Leaf, StateSpace};
use crate::tlt::{ApproxDir, Connective, PrimitiveSet, PrimitiveSpec};

pub use system::LinearSystem;
pub use zonotope::HybridZonotope;

fn default_cap() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HzConfig {
    pub dt: f64,
    pub steps: usize,
    /// Largest binary count emptiness and membership will enumerate.
    #[serde(default = "default_cap")]
    pub binary_cap: usize,
}

#[derive(Debug)]
pub struct HzBackend {
    space: StateSpace,
    system: LinearSystem,
    times: Arc<[f64]>,
    cap: usize,
    instance: u64,
    state_box: HybridZonotope,
}

impl HzBackend {
    pub fn new(space: StateSpace, system: LinearSystem, t0: f64, config: &HzConfig) -> Result<HzBackend, BackendError> {
        if system.dim() != space.dim() {
            return Err(BackendError::ShapeMismatch("system and state space dimensions differ".into()));
        }
        if (system.dt - config.dt).abs() > 1e-12 {
            return Err(BackendError::Invalid("system time step differs from the configured step".into()));
        }
        let times: Arc<[f64]> = (0..=config.steps).map(|j| t0 + j as f64 * config.dt).collect();
        let lo: Vec<f64> = space.axes().iter().map(|a| a.lower).collect();
        let hi: Vec<f64> = space.axes().iter().map(|a| a.upper).collect();
        Ok(HzBackend {
            state_box: HybridZonotope::from_box(&lo, &hi)?,
            space,
            system,
            times,
            cap: config.binary_cap,
            instance: next_instance_id(),
        })
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    pub fn binary_cap(&self) -> usize {
        self.cap
    }

    pub fn state_box(&self) -> &HybridZonotope {
        &self.state_box
    }

    /// Full `LTL`; temporal primitives are under-approximations and `G` and `U`
    /// refuse approximate temporal arguments.
    pub fn primitive_set() -> PrimitiveSet {
        use ApproxDir::*;
        use Procedure::*;
        let mut p = BTreeMap::new();
        p.insert(Connective::Top, PrimitiveSpec::new(&[Full], Exact, &[]));
        p.insert(Connective::Prop, PrimitiveSpec::new(&[MakeBox], Exact, &[]));
        p.insert(Connective::Not, PrimitiveSpec::new(&[Complement], Exact, &[true]));
        p.insert(Connective::And, PrimitiveSpec::new(&[Intersect], Exact, &[true, true]));
        p.insert(Connective::Or, PrimitiveSpec::new(&[Union], Exact, &[true, true]));
        p.insert(Connective::Until, PrimitiveSpec::new(&[Reach, NextPred, Union], Under, &[false, false]));
        p.insert(Connective::Eventually, PrimitiveSpec::new(&[Reach, NextPred, Union], Under, &[false]));
        p.insert(Connective::Always, PrimitiveSpec::new(&[NextPred, Intersect], Under, &[false]));
        p.insert(Connective::Next, PrimitiveSpec::new(&[NextPred], Under, &[true]));
        PrimitiveSet {
            name: "hz".into(),
            fragment: Fragment::Ltl,
            requires_nnf: true,
            eventually_via_until: true,
            primitives: p,
        }
    }

    fn clip(&self, bounds: &[Interval]) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = Vec::with_capacity(bounds.len());
        let mut hi = Vec::with_capacity(bounds.len());
        for (iv, a) in bounds.iter().zip(self.space.axes()) {
            let l = iv.lo.map_or(a.lower, |v| v.max(a.lower));
            let h = iv.hi.map_or(a.upper, |v| v.min(a.upper));
            if l > h {
                return None;
            }
            lo.push(l);
            hi.push(h);
        }
        Some((lo, hi))
    }

    fn check_times<S>(&self, s: &TimedSet<S>) -> Result<(), BackendError> {
        if s.times()[..] != self.times[..] {
            return Err(BackendError::HorizonMismatch);
        }
        Ok(())
    }
}

impl Backend for HzBackend {
    type Slice = HybridZonotope;

    fn id(&self) -> &'static str {
        "hz"
    }

    fn instance(&self) -> u64 {
        self.instance
    }

    fn capabilities(&self) -> BackendCapabilities {
        use Procedure::*;
        let procedures = [
            Complement, Intersect, Union, Reach, NextPred, Empty, Member, MakeBox, MakeHalfspace, Full, EmptySet,
        ];
        BackendCapabilities {
            procedures: procedures.into_iter().collect(),
            time_model: TimeModel::Discrete { step: self.system.dt },
            directions: procedures
                .into_iter()
                .map(|p| {
                    let d = if matches!(p, Reach | NextPred) { ApproxDir::Under } else { ApproxDir::Exact };
                    (p, d)
                })
                .collect(),
            share_safe: true,
        }
    }

    fn primitives(&self) -> PrimitiveSet {
        HzBackend::primitive_set()
    }

    fn space(&self) -> &StateSpace {
        &self.space
    }

    fn times(&self) -> &Arc<[f64]> {
        &self.times
    }

    fn complements_leaves_only(&self) -> bool {
        true
    }

    fn full(&self) -> Result<HybridZonotope, BackendError> {
        Ok(self.state_box.clone())
    }

    fn empty_set(&self) -> Result<HybridZonotope, BackendError> {
        Ok(HybridZonotope::empty(self.space.dim()))
    }

    fn make_box(&self, bounds: &[Interval]) -> Result<HybridZonotope, BackendError> {
        if bounds.len() != self.space.dim() {
            return Err(BackendError::ShapeMismatch("box dimension".into()));
        }
        match self.clip(bounds) {
            Some((lo, hi)) => HybridZonotope::from_box(&lo, &hi),
            None => self.empty_set(),
        }
    }

    fn make_halfspace(&self, normal: &[f64], offset: f64) -> Result<HybridZonotope, BackendError> {
        self.state_box.intersect_halfspace(normal, offset)
    }

    fn complement(&self, s: &HybridZonotope) -> Result<HybridZonotope, BackendError> {
        if s.is_trivially_empty() {
            return self.full();
        }
        Err(BackendError::UnsupportedGeometry(
            "complement of a general hybrid zonotope; only leaves can be complemented".into(),
        ))
    }

    /// Box complements become a union of at most `2 n` slabs of the state box.
    fn complement_leaf(&self, leaf: &Leaf) -> Result<HybridZonotope, BackendError> {
        match leaf {
            Leaf::Full => self.empty_set(),
            Leaf::Empty => self.full(),
            Leaf::Halfspace { normal, offset } => {
                let flipped: Vec<f64> = normal.iter().map(|v| -v).collect();
                self.make_halfspace(&flipped, -offset)
            }
            Leaf::Box(bounds) => {
                let Some((lo, hi)) = self.clip(bounds) else {
                    return self.full();
                };
                let mut acc = self.empty_set()?;
                for (i, a) in self.space.axes().iter().enumerate() {
                    if lo[i] > a.lower {
                        let mut slab = vec![Interval { lo: None, hi: None }; lo.len()];
                        slab[i].hi = Some(lo[i]);
                        acc = acc.union(&self.make_box(&slab)?)?;
                    }
                    if hi[i] < a.upper {
                        let mut slab = vec![Interval { lo: None, hi: None }; lo.len()];
                        slab[i].lo = Some(hi[i]);
                        acc = acc.union(&self.make_box(&slab)?)?;
                    }
                }
                Ok(acc)
            }
        }
    }

    fn intersect(&self, a: &HybridZonotope, b: &HybridZonotope) -> Result<HybridZonotope, BackendError> {
        Ok(a.intersect(b)?.prune())
    }

    fn union(&self, a: &HybridZonotope, b: &HybridZonotope) -> Result<HybridZonotope, BackendError> {
        Ok(a.union(b)?.prune())
    }

    fn is_empty(&self, s: &HybridZonotope) -> Result<bool, BackendError> {
        s.is_empty(self.cap)
    }

    fn contains(&self, s: &HybridZonotope, z: &[f64]) -> Result<bool, BackendError> {
        s.contains(z, self.cap)
    }

    /// `R[N] = T[N]`, `R[j] = T[j] ∪ pred(R[j+1], C[j])`.
    fn reach(
        &self,
        target: &TimedSet<HybridZonotope>,
        constraint: &TimedSet<HybridZonotope>,
    ) -> Result<TimedSet<HybridZonotope>, BackendError> {
        self.check_times(target)?;
        self.check_times(constraint)?;
        let n = self.times.len() - 1;
        let mut out: Vec<Arc<HybridZonotope>> = vec![target.slices()[n].clone(); n + 1];
        for j in (0..n).rev() {
            let p = self.system.pred(&out[j + 1], constraint.at(j))?;
            out[j] = Arc::new(target.at(j).union(&p)?.prune());
        }
        Ok(TimedSet::new(self.times.clone(), out))
    }

    /// `W[N] = C[N]`, `W[j] = pred(W[j+1], C[j])`.
    fn always(&self, constraint: &TimedSet<HybridZonotope>) -> Result<TimedSet<HybridZonotope>, BackendError> {
        self.check_times(constraint)?;
        let n = self.times.len() - 1;
        let mut out: Vec<Arc<HybridZonotope>> = vec![constraint.slices()[n].clone(); n + 1];
        for j in (0..n).rev() {
            out[j] = Arc::new(self.system.pred(&out[j + 1], constraint.at(j))?);
        }
        Ok(TimedSet::new(self.times.clone(), out))
    }

    /// `X[j] = pred(A[j+1], S)`; no successor exists at the final step, so `X[N]` is empty.
    fn next(&self, target: &TimedSet<HybridZonotope>) -> Result<TimedSet<HybridZonotope>, BackendError> {
        self.check_times(target)?;
        let n = self.times.len() - 1;
        let mut out = Vec::with_capacity(n + 1);
        for j in 0..n {
            out.push(Arc::new(self.system.pred(target.at(j + 1), &self.state_box)?));
        }
        out.push(Arc::new(self.empty_set()?));
        Ok(TimedSet::new(self.times.clone(), out))
    }

    fn metrics(&self, s: &TimedSet<HybridZonotope>) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        let first = s.at(0);
        m.insert("continuous_generators".into(), first.n_g() as f64);
        m.insert("binary_generators".into(), first.n_b() as f64);
        m.insert("constraints".into(), first.n_c() as f64);
        let max_g = s.slices().iter().map(|z| z.n_g()).max().unwrap_or(0);
        let max_c = s.slices().iter().map(|z| z.n_c()).max().unwrap_or(0);
        m.insert("max_continuous_generators".into(), max_g as f64);
        m.insert("max_constraints".into(), max_c as f64);
        m.insert("steps".into(), (self.times.len() - 1) as f64);
        m.insert("dt".into(), self.system.dt);
        m
    }
}
