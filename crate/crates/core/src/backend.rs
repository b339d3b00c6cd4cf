//! The contract every reachability backend implements.
//!
//! A backend owns a state space, a fixed ascending list of stored time
//! instants, and a native per-instant set representation (`Slice`). Timed
//! sets pair one slice with every stored instant; time-invariant sets share a
//! single slice across all instants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::setexpr::{build_leaf, Interval, Leaf, StateSpace};
use crate::tlt::{ApproxDir, PrimitiveSet};

/// Backend procedure tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    Complement,
    Intersect,
    Union,
    Reach,
    Avoid,
    NextPred,
    Empty,
    Member,
    MakeBox,
    MakeHalfspace,
    Full,
    EmptySet,
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("tag serializes");
        f.write_str(s.as_str().expect("string tag"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TimeModel {
    Continuous,
    Discrete { step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendCapabilities {
    pub procedures: BTreeSet<Procedure>,
    pub time_model: TimeModel,
    pub directions: BTreeMap<Procedure, ApproxDir>,
    pub share_safe: bool,
}

impl BackendCapabilities {
    pub fn has(&self, p: Procedure) -> bool {
        self.procedures.contains(&p)
    }

    /// Checks the structural rules: reach implies make_box, discrete steps are positive.
    pub fn validate(&self) -> Result<(), String> {
        if self.has(Procedure::Reach) && !self.has(Procedure::MakeBox) {
            return Err("reach requires make_box".into());
        }
        if let TimeModel::Discrete { step } = self.time_model {
            if !(step > 0.0) {
                return Err("discrete time step must be positive".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("procedure `{0}` is not provided by this backend")]
    Unsupported(Procedure),
    #[error("operands are defined on different time grids")]
    HorizonMismatch,
    #[error("operands have mismatched shapes: {0}")]
    ShapeMismatch(String),
    #[error("CFL condition violated: dt * sum(alpha / dx) = {ratio:.4} > {limit}")]
    CflViolation { ratio: f64, limit: f64 },
    #[error("non-finite value produced at step {step}")]
    NonFinite { step: usize },
    #[error("{n_b} binary generators exceeds the enumeration cap of {cap}")]
    BinaryCapExceeded { n_b: usize, cap: usize },
    #[error("linear program did not converge within {0} iterations")]
    LpIterationLimit(usize),
    #[error("state or time outside the backend domain")]
    OutOfDomain,
    #[error("{0}")]
    Invalid(String),
}

/// A backend set defined at every stored time instant.
#[derive(Debug)]
pub struct TimedSet<S> {
    times: Arc<[f64]>,
    slices: Vec<Arc<S>>,
}

impl<S> Clone for TimedSet<S> {
    fn clone(&self) -> Self {
        TimedSet {
            times: self.times.clone(),
            slices: self.slices.clone(),
        }
    }
}

impl<S> TimedSet<S> {
    pub fn new(times: Arc<[f64]>, slices: Vec<Arc<S>>) -> Self {
        assert_eq!(times.len(), slices.len(), "one slice per stored time");
        TimedSet { times, slices }
    }

    pub fn constant(times: Arc<[f64]>, slice: Arc<S>) -> Self {
        let slices = vec![slice; times.len()];
        TimedSet { times, slices }
    }

    pub fn times(&self) -> &Arc<[f64]> {
        &self.times
    }

    pub fn slices(&self) -> &[Arc<S>] {
        &self.slices
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn at(&self, k: usize) -> &S {
        &self.slices[k]
    }

    /// True when every instant shares one slice.
    pub fn is_constant(&self) -> bool {
        self.slices.windows(2).all(|w| Arc::ptr_eq(&w[0], &w[1]))
    }

    /// Index of the stored instant nearest to `t`; `None` outside `[t0, tf]`.
    pub fn nearest_index(&self, t: f64) -> Option<usize> {
        nearest_index(&self.times, t)
    }

    pub fn same_grid(&self, other: &TimedSet<S>) -> bool {
        Arc::ptr_eq(&self.times, &other.times) || self.times[..] == other.times[..]
    }

    /// Applies `f` at every instant, evaluating once per run of shared slices.
    pub fn map<T, E>(&self, mut f: impl FnMut(&S) -> Result<T, E>) -> Result<TimedSet<T>, E> {
        let mut out: Vec<Arc<T>> = Vec::with_capacity(self.len());
        for (k, s) in self.slices.iter().enumerate() {
            if k > 0 && Arc::ptr_eq(s, &self.slices[k - 1]) {
                let prev = out[k - 1].clone();
                out.push(prev);
            } else {
                out.push(Arc::new(f(s)?));
            }
        }
        Ok(TimedSet {
            times: self.times.clone(),
            slices: out,
        })
    }

    /// Pointwise binary combination; memoizes runs where both operands repeat.
    pub fn zip<T, E>(
        &self,
        other: &TimedSet<S>,
        mut f: impl FnMut(&S, &S) -> Result<T, E>,
    ) -> Result<TimedSet<T>, E>
    where
        E: From<BackendError>,
    {
        if !self.same_grid(other) {
            return Err(BackendError::HorizonMismatch.into());
        }
        let mut out: Vec<Arc<T>> = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let (a, b) = (&self.slices[k], &other.slices[k]);
            if k > 0 && Arc::ptr_eq(a, &self.slices[k - 1]) && Arc::ptr_eq(b, &other.slices[k - 1]) {
                let prev = out[k - 1].clone();
                out.push(prev);
            } else {
                out.push(Arc::new(f(a, b)?));
            }
        }
        Ok(TimedSet {
            times: self.times.clone(),
            slices: out,
        })
    }
}

pub(crate) fn nearest_index(times: &[f64], t: f64) -> Option<usize> {
    let (t0, tf) = (times[0], times[times.len() - 1]);
    let tol = 1e-9 * (1.0 + (tf - t0).abs());
    if !(t >= t0 - tol && t <= tf + tol) {
        return None;
    }
    let pos = times.partition_point(|&s| s < t);
    Some(match pos {
        0 => 0,
        p if p == times.len() => p - 1,
        p => {
            if (times[p] - t) < (t - times[p - 1]) {
                p
            } else {
                p - 1
            }
        }
    })
}

/// Fresh process-unique id for a backend instance; keys realization caches.
pub fn next_instance_id() -> u64 {
    static NEXT: AtomicU64 = AtomicU64::new(1);
    NEXT.fetch_add(1, Ordering::Relaxed)
}

/// The reachability backend contract.
///
/// Implementations must be deterministic: identical inputs give bit-identical slices.
pub trait Backend: Sync {
    type Slice: Send + Sync + 'static;

    /// Short stable identifier, e.g. `"hj"`.
    fn id(&self) -> &'static str;
    /// Process-unique instance id, see [`next_instance_id`].
    fn instance(&self) -> u64;
    fn capabilities(&self) -> BackendCapabilities;
    fn primitives(&self) -> PrimitiveSet;
    fn space(&self) -> &StateSpace;
    /// Stored time instants, ascending, spanning the analysis horizon.
    fn times(&self) -> &Arc<[f64]>;

    /// Whether `complement` only works on geometric leaves (formulas must be in NNF).
    fn complements_leaves_only(&self) -> bool {
        false
    }

    fn full(&self) -> Result<Self::Slice, BackendError>;
    fn empty_set(&self) -> Result<Self::Slice, BackendError>;
    fn make_box(&self, bounds: &[Interval]) -> Result<Self::Slice, BackendError>;
    fn make_halfspace(&self, normal: &[f64], offset: f64) -> Result<Self::Slice, BackendError>;
    fn complement(&self, s: &Self::Slice) -> Result<Self::Slice, BackendError>;
    fn intersect(&self, a: &Self::Slice, b: &Self::Slice) -> Result<Self::Slice, BackendError>;
    fn union(&self, a: &Self::Slice, b: &Self::Slice) -> Result<Self::Slice, BackendError>;
    fn is_empty(&self, s: &Self::Slice) -> Result<bool, BackendError>;
    fn contains(&self, s: &Self::Slice, z: &[f64]) -> Result<bool, BackendError>;

    fn complement_leaf(&self, leaf: &Leaf) -> Result<Self::Slice, BackendError> {
        let s = build_leaf(leaf, self)?;
        self.complement(&s)
    }

    /// States that can reach `target` within the remaining horizon while staying in `constraint`.
    fn reach(
        &self,
        target: &TimedSet<Self::Slice>,
        constraint: &TimedSet<Self::Slice>,
    ) -> Result<TimedSet<Self::Slice>, BackendError>;

    /// States that can remain in `constraint` for the remaining horizon.
    fn always(&self, constraint: &TimedSet<Self::Slice>) -> Result<TimedSet<Self::Slice>, BackendError>;

    /// States forced into `target` within the remaining horizon regardless of control.
    fn avoid(&self, _target: &TimedSet<Self::Slice>) -> Result<TimedSet<Self::Slice>, BackendError> {
        Err(BackendError::Unsupported(Procedure::Avoid))
    }

    /// States that can enter `target` at the next discrete step.
    fn next(&self, _target: &TimedSet<Self::Slice>) -> Result<TimedSet<Self::Slice>, BackendError> {
        Err(BackendError::Unsupported(Procedure::NextPred))
    }

    /// Backend-specific size metrics of a realized set.
    fn metrics(&self, _s: &TimedSet<Self::Slice>) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn full_timed(&self) -> Result<TimedSet<Self::Slice>, BackendError> {
        Ok(TimedSet::constant(self.times().clone(), Arc::new(self.full()?)))
    }

    fn empty_timed(&self) -> Result<TimedSet<Self::Slice>, BackendError> {
        Ok(TimedSet::constant(self.times().clone(), Arc::new(self.empty_set()?)))
    }

    fn complement_timed(&self, s: &TimedSet<Self::Slice>) -> Result<TimedSet<Self::Slice>, BackendError> {
        s.map(|x| self.complement(x))
    }

    fn intersect_timed(
        &self,
        a: &TimedSet<Self::Slice>,
        b: &TimedSet<Self::Slice>,
    ) -> Result<TimedSet<Self::Slice>, BackendError> {
        a.zip(b, |x, y| self.intersect(x, y))
    }

    fn union_timed(
        &self,
        a: &TimedSet<Self::Slice>,
        b: &TimedSet<Self::Slice>,
    ) -> Result<TimedSet<Self::Slice>, BackendError> {
        a.zip(b, |x, y| self.union(x, y))
    }

    /// Membership at the stored instant nearest `t`.
    fn member_at(&self, s: &TimedSet<Self::Slice>, z: &[f64], t: f64) -> Result<bool, BackendError> {
        if !self.space().contains(z) {
            return Err(BackendError::OutOfDomain);
        }
        let k = s.nearest_index(t).ok_or(BackendError::OutOfDomain)?;
        self.contains(s.at(k), z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_index_rounds_and_bounds() {
        let times: Vec<f64> = vec![0.0, 0.5, 1.0, 1.5];
        assert_eq!(nearest_index(&times, 0.0), Some(0));
        assert_eq!(nearest_index(&times, 0.74), Some(1));
        assert_eq!(nearest_index(&times, 0.76), Some(2));
        assert_eq!(nearest_index(&times, 1.5), Some(3));
        assert_eq!(nearest_index(&times, 2.5), None);
        assert_eq!(nearest_index(&times, -0.1), None);
    }

    #[test]
    fn map_and_zip_share_repeated_slices() {
        let times: Arc<[f64]> = vec![0.0, 1.0, 2.0].into();
        let a = TimedSet::constant(times.clone(), Arc::new(2.0_f64));
        let b = TimedSet::new(times, vec![Arc::new(1.0), Arc::new(1.0), Arc::new(5.0)]);
        let mut calls = 0;
        let m = a
            .map(|x| {
                calls += 1;
                Ok::<_, BackendError>(x * 2.0)
            })
            .unwrap();
        assert_eq!(calls, 1);
        assert!(m.is_constant());
        let z = a.zip(&b, |x, y| Ok::<_, BackendError>(x + y)).unwrap();
        assert_eq!(z.slices().iter().map(|s| **s).collect::<Vec<_>>(), vec![3.0, 3.0, 7.0]);
    }

    #[test]
    fn capability_rules() {
        let mut caps = BackendCapabilities {
            procedures: [Procedure::Reach].into_iter().collect(),
            time_model: TimeModel::Continuous,
            directions: BTreeMap::new(),
            share_safe: true,
        };
        assert!(caps.validate().is_err());
        caps.procedures.insert(Procedure::MakeBox);
        assert!(caps.validate().is_ok());
        caps.time_model = TimeModel::Discrete { step: 0.0 };
        assert!(caps.validate().is_err());
        assert_eq!(Procedure::NextPred.to_string(), "next_pred");
    }
}
