//! Backend-independent set descriptions and the proposition map.
//!
//! A [`SetExpr`] is a lazily evaluated description of a subset of the state
//! space. Nothing is computed until [`evaluate`] is called with a concrete
//! backend, which supplies the geometric constructors and set algebra.
//!
//! Box bounds may move affinely in time (`offset + rate * t`), which is enough
//! to describe moving obstacles. Open and closed bounds are tracked in the
//! syntax only; both shipped backends treat them identically because neither
//! a grid nor a linear program can resolve a measure-zero boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::backend::{Backend, BackendError, TimedSet};
use crate::formula::is_identifier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub periodic: bool,
}

impl Axis {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Axis {
            name: name.into(),
            lower,
            upper,
            periodic: false,
        }
    }
}

/// Ordered list of named, bounded axes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSpace {
    axes: Vec<Axis>,
}

impl StateSpace {
    pub fn new(axes: Vec<Axis>) -> Result<Self, SetExprError> {
        if axes.is_empty() {
            return Err(SetExprError::InvalidSpace("state space needs at least one axis".into()));
        }
        let mut seen = BTreeSet::new();
        for a in &axes {
            if !is_identifier(&a.name) {
                return Err(SetExprError::InvalidSpace(format!("invalid axis name `{}`", a.name)));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(SetExprError::InvalidSpace(format!("duplicate axis `{}`", a.name)));
            }
            if !(a.lower.is_finite() && a.upper.is_finite() && a.lower < a.upper) {
                return Err(SetExprError::InvalidSpace(format!(
                    "axis `{}` needs finite lower < upper",
                    a.name
                )));
            }
        }
        Ok(StateSpace { axes })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim()
            && self.axes.iter().zip(z).all(|(a, &v)| v >= a.lower && v <= a.upper)
    }
}

impl<'de> Deserialize<'de> for StateSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            axes: Vec<Axis>,
        }
        let raw = Raw::deserialize(d)?;
        StateSpace::new(raw.axes).map_err(D::Error::custom)
    }
}

/// `offset + rate * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineInTime {
    pub offset: f64,
    pub rate: f64,
}

impl AffineInTime {
    pub fn constant(offset: f64) -> Self {
        AffineInTime { offset, rate: 0.0 }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.offset + self.rate * t
    }
}

impl Serialize for AffineInTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.rate == 0.0 {
            s.serialize_f64(self.offset)
        } else {
            #[derive(Serialize)]
            struct Raw {
                offset: f64,
                rate: f64,
            }
            Raw {
                offset: self.offset,
                rate: self.rate,
            }
            .serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for AffineInTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Affine {
                offset: f64,
                #[serde(default)]
                rate: f64,
            },
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Number(v) => AffineInTime::constant(v),
            Raw::Affine { offset, rate } => AffineInTime { offset, rate },
        })
    }
}

/// Bounds of a box along one axis. A missing side extends to the state-space edge.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBounds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<AffineInTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<AffineInTime>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lo_open: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub hi_open: bool,
}

impl AxisBounds {
    pub fn closed(lo: f64, hi: f64) -> Self {
        AxisBounds {
            lo: Some(AffineInTime::constant(lo)),
            hi: Some(AffineInTime::constant(hi)),
            ..Default::default()
        }
    }

    pub fn below(hi: f64) -> Self {
        AxisBounds {
            hi: Some(AffineInTime::constant(hi)),
            ..Default::default()
        }
    }

    pub fn above(lo: f64) -> Self {
        AxisBounds {
            lo: Some(AffineInTime::constant(lo)),
            ..Default::default()
        }
    }

    pub fn moving(lo: AffineInTime, hi: AffineInTime) -> Self {
        AxisBounds {
            lo: Some(lo),
            hi: Some(hi),
            ..Default::default()
        }
    }

    pub fn open(mut self) -> Self {
        self.lo_open = self.lo.is_some();
        self.hi_open = self.hi.is_some();
        self
    }
}

/// Halfspace normal, either positional or keyed by axis name (missing axes are zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Normal {
    Dense(Vec<f64>),
    Named(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetExpr {
    #[serde(rename = "full")]
    FullSpace,
    #[serde(rename = "empty")]
    EmptySet,
    Box {
        bounds: BTreeMap<String, AxisBounds>,
    },
    /// `{z : normal · z <= offset}`
    Halfspace {
        normal: Normal,
        offset: f64,
    },
    Union {
        args: Vec<SetExpr>,
    },
    Intersection {
        args: Vec<SetExpr>,
    },
    Complement {
        arg: Box<SetExpr>,
    },
    Ref {
        name: String,
    },
}

/// One-sided interval instantiated at a time instant; `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

/// A geometric leaf with all time-dependence resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Leaf {
    Full,
    Empty,
    /// One interval per state-space axis, in axis order.
    Box(Vec<Interval>),
    Halfspace { normal: Vec<f64>, offset: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetExprError {
    #[error("invalid proposition name `{0}`")]
    InvalidName(String),
    #[error("binding `{0}` creates a reference cycle")]
    CycleError(String),
    #[error("unbound proposition `{0}`")]
    UnboundProposition(String),
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("invalid state space: {0}")]
    InvalidSpace(String),
    #[error("invalid set: {0}")]
    InvalidSet(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound proposition `{0}`")]
    UnboundProposition(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("time {t} outside horizon [{t0}, {tf}]")]
    OutsideHorizon { t: f64, t0: f64, tf: f64 },
    #[error(transparent)]
    Set(#[from] SetExprError),
    #[error(transparent)]
    Backend(BackendError),
}

impl From<BackendError> for EvalError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::UnsupportedGeometry(msg) => EvalError::UnsupportedGeometry(msg),
            other => EvalError::Backend(other),
        }
    }
}

impl SetExpr {
    pub fn boxed(bounds: impl IntoIterator<Item = (&'static str, AxisBounds)>) -> SetExpr {
        SetExpr::Box {
            bounds: bounds.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn reference(name: impl Into<String>) -> SetExpr {
        SetExpr::Ref { name: name.into() }
    }

    pub fn union(args: Vec<SetExpr>) -> SetExpr {
        SetExpr::Union { args }
    }

    pub fn intersection(args: Vec<SetExpr>) -> SetExpr {
        SetExpr::Intersection { args }
    }

    pub fn complement(arg: SetExpr) -> SetExpr {
        SetExpr::Complement { arg: Box::new(arg) }
    }

    pub fn refs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs(&self, out: &mut BTreeSet<String>) {
        match self {
            SetExpr::Ref { name } => {
                out.insert(name.clone());
            }
            SetExpr::Union { args } | SetExpr::Intersection { args } => {
                args.iter().for_each(|a| a.collect_refs(out))
            }
            SetExpr::Complement { arg } => arg.collect_refs(out),
            _ => {}
        }
    }

    /// True when no box bound (after resolving references) moves with time.
    pub fn is_time_invariant(&self, m: &PropositionMap) -> Result<bool, EvalError> {
        Ok(match self {
            SetExpr::Box { bounds } => bounds.values().all(|b| {
                b.lo.is_none_or(|a| a.rate == 0.0) && b.hi.is_none_or(|a| a.rate == 0.0)
            }),
            SetExpr::Union { args } | SetExpr::Intersection { args } => {
                for a in args {
                    if !a.is_time_invariant(m)? {
                        return Ok(false);
                    }
                }
                true
            }
            SetExpr::Complement { arg } => arg.is_time_invariant(m)?,
            SetExpr::Ref { name } => m.resolve(name)?.is_time_invariant(m)?,
            _ => true,
        })
    }

    /// Instantiates a geometric leaf at time `t`. Returns `None` for composite expressions.
    pub fn leaf_at(&self, space: &StateSpace, t: f64) -> Result<Option<Leaf>, SetExprError> {
        Ok(Some(match self {
            SetExpr::FullSpace => Leaf::Full,
            SetExpr::EmptySet => Leaf::Empty,
            SetExpr::Box { bounds } => {
                let mut out = vec![Interval { lo: None, hi: None }; space.dim()];
                for (name, b) in bounds {
                    let i = space
                        .axis_index(name)
                        .ok_or_else(|| SetExprError::UnknownAxis(name.clone()))?;
                    out[i] = Interval {
                        lo: b.lo.map(|a| a.at(t)),
                        hi: b.hi.map(|a| a.at(t)),
                    };
                }
                Leaf::Box(out)
            }
            SetExpr::Halfspace { normal, offset } => {
                Leaf::Halfspace {
                    normal: resolve_normal(normal, space)?,
                    offset: *offset,
                }
            }
            _ => return Ok(None),
        }))
    }

    /// Checks axis names, halfspace normals and box orientation over `[t0, tf]`.
    pub fn validate(&self, space: &StateSpace, horizon: (f64, f64)) -> Result<(), SetExprError> {
        match self {
            SetExpr::Box { bounds } => {
                for (name, b) in bounds {
                    if space.axis_index(name).is_none() {
                        return Err(SetExprError::UnknownAxis(name.clone()));
                    }
                    for v in [b.lo, b.hi].into_iter().flatten() {
                        if !(v.offset.is_finite() && v.rate.is_finite()) {
                            return Err(SetExprError::InvalidSet(format!(
                                "non-finite bound on axis `{name}`"
                            )));
                        }
                    }
                    if let (Some(lo), Some(hi)) = (b.lo, b.hi) {
                        // affine bounds: checking both ends of the horizon is sufficient
                        for t in [horizon.0, horizon.1] {
                            if lo.at(t) > hi.at(t) {
                                return Err(SetExprError::InvalidSet(format!(
                                    "box bound on `{name}` has lower > upper at t = {t}"
                                )));
                            }
                        }
                    }
                }
                Ok(())
            }
            SetExpr::Halfspace { normal, offset } => {
                let n = resolve_normal(normal, space)?;
                if n.iter().all(|&v| v == 0.0) || n.iter().any(|v| !v.is_finite()) {
                    return Err(SetExprError::InvalidSet("halfspace normal must be nonzero".into()));
                }
                if !offset.is_finite() {
                    return Err(SetExprError::InvalidSet("halfspace offset must be finite".into()));
                }
                Ok(())
            }
            SetExpr::Union { args } | SetExpr::Intersection { args } => {
                if args.is_empty() {
                    return Err(SetExprError::InvalidSet("union/intersection needs arguments".into()));
                }
                args.iter().try_for_each(|a| a.validate(space, horizon))
            }
            SetExpr::Complement { arg } => arg.validate(space, horizon),
            SetExpr::Ref { name } => {
                if is_identifier(name) {
                    Ok(())
                } else {
                    Err(SetExprError::InvalidName(name.clone()))
                }
            }
            SetExpr::FullSpace | SetExpr::EmptySet => Ok(()),
        }
    }
}

fn resolve_normal(normal: &Normal, space: &StateSpace) -> Result<Vec<f64>, SetExprError> {
    match normal {
        Normal::Dense(v) => {
            if v.len() != space.dim() {
                return Err(SetExprError::InvalidSet(format!(
                    "halfspace normal has {} entries, state space has {} axes",
                    v.len(),
                    space.dim()
                )));
            }
            Ok(v.clone())
        }
        Normal::Named(m) => {
            let mut out = vec![0.0; space.dim()];
            for (name, &v) in m {
                let i = space
                    .axis_index(name)
                    .ok_or_else(|| SetExprError::UnknownAxis(name.clone()))?;
                out[i] = v;
            }
            Ok(out)
        }
    }
}

/// Map from proposition names to the sets they denote.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropositionMap {
    bindings: BTreeMap<String, SetExpr>,
}

impl PropositionMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns a new map with `name` bound to `s`, replacing any earlier binding.
    pub fn bind(&self, name: &str, s: SetExpr) -> Result<PropositionMap, SetExprError> {
        if !is_identifier(name) {
            return Err(SetExprError::InvalidName(name.to_string()));
        }
        let mut next = self.clone();
        next.bindings.insert(name.to_string(), s);
        if next.reaches(name, name, &mut BTreeSet::new()) {
            return Err(SetExprError::CycleError(name.to_string()));
        }
        Ok(next)
    }

    /// Whether following references from the binding of `from` leads back to `target`.
    fn reaches(&self, from: &str, target: &str, seen: &mut BTreeSet<String>) -> bool {
        let Some(expr) = self.bindings.get(from) else {
            return false;
        };
        for r in expr.refs() {
            if r == target {
                return true;
            }
            if seen.insert(r.clone()) && self.reaches(&r, target, seen) {
                return true;
            }
        }
        false
    }

    pub fn resolve(&self, name: &str) -> Result<&SetExpr, SetExprError> {
        self.bindings
            .get(name)
            .ok_or_else(|| SetExprError::UnboundProposition(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.bindings.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &SetExpr)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Validates every binding and checks that all references resolve.
    pub fn validate(&self, space: &StateSpace, horizon: (f64, f64)) -> Result<(), SetExprError> {
        for (name, expr) in &self.bindings {
            if !is_identifier(name) {
                return Err(SetExprError::InvalidName(name.clone()));
            }
            expr.validate(space, horizon)?;
            for r in expr.refs() {
                if !self.contains(&r) {
                    return Err(SetExprError::UnboundProposition(r));
                }
            }
            if self.reaches(name, name, &mut BTreeSet::new()) {
                return Err(SetExprError::CycleError(name.clone()));
            }
        }
        Ok(())
    }
}

/// Evaluates `s` at time instant `t` into the backend's native representation.
pub fn evaluate<B: Backend>(
    s: &SetExpr,
    backend: &B,
    m: &PropositionMap,
    t: f64,
) -> Result<B::Slice, EvalError> {
    let times = backend.times();
    let (t0, tf) = (times[0], times[times.len() - 1]);
    if !(t >= t0 - 1e-9 && t <= tf + 1e-9) {
        return Err(EvalError::OutsideHorizon { t, t0, tf });
    }
    eval_at(s, backend, m, t)
}

fn eval_at<B: Backend>(
    s: &SetExpr,
    backend: &B,
    m: &PropositionMap,
    t: f64,
) -> Result<B::Slice, EvalError> {
    let space = backend.space();
    match s {
        SetExpr::Ref { name } => {
            let target = m
                .resolve(name)
                .map_err(|_| EvalError::UnboundProposition(name.clone()))?;
            eval_at(target, backend, m, t)
        }
        SetExpr::Union { args } | SetExpr::Intersection { args } => {
            let is_union = matches!(s, SetExpr::Union { .. });
            let mut it = args.iter();
            let first = it
                .next()
                .ok_or_else(|| SetExprError::InvalidSet("union/intersection needs arguments".into()))?;
            let mut acc = eval_at(first, backend, m, t)?;
            for a in it {
                let v = eval_at(a, backend, m, t)?;
                acc = if is_union {
                    backend.union(&acc, &v)?
                } else {
                    backend.intersect(&acc, &v)?
                };
            }
            Ok(acc)
        }
        SetExpr::Complement { arg } => eval_complement(arg, backend, m, t),
        leaf => {
            let leaf = leaf.leaf_at(space, t)?.expect("geometric leaf");
            Ok(build_leaf(&leaf, backend)?)
        }
    }
}

fn eval_complement<B: Backend>(
    arg: &SetExpr,
    backend: &B,
    m: &PropositionMap,
    t: f64,
) -> Result<B::Slice, EvalError> {
    match arg {
        SetExpr::Ref { name } => {
            let target = m
                .resolve(name)
                .map_err(|_| EvalError::UnboundProposition(name.clone()))?;
            eval_complement(target, backend, m, t)
        }
        SetExpr::FullSpace => Ok(backend.empty_set()?),
        SetExpr::EmptySet => Ok(backend.full()?),
        SetExpr::Complement { arg } => eval_at(arg, backend, m, t),
        SetExpr::Union { args } | SetExpr::Intersection { args }
            if backend.complements_leaves_only() =>
        {
            // De Morgan: push the complement down to the geometric leaves
            let negated = args.iter().cloned().map(SetExpr::complement).collect();
            let dual = if matches!(arg, SetExpr::Union { .. }) {
                SetExpr::Intersection { args: negated }
            } else {
                SetExpr::Union { args: negated }
            };
            eval_at(&dual, backend, m, t)
        }
        SetExpr::Union { .. } | SetExpr::Intersection { .. } => {
            let inner = eval_at(arg, backend, m, t)?;
            Ok(backend.complement(&inner)?)
        }
        leaf => {
            let leaf = leaf.leaf_at(backend.space(), t)?.expect("geometric leaf");
            Ok(backend.complement_leaf(&leaf)?)
        }
    }
}

pub(crate) fn build_leaf<B: Backend + ?Sized>(leaf: &Leaf, backend: &B) -> Result<B::Slice, BackendError> {
    match leaf {
        Leaf::Full => backend.full(),
        Leaf::Empty => backend.empty_set(),
        Leaf::Box(iv) => backend.make_box(iv),
        Leaf::Halfspace { normal, offset } => backend.make_halfspace(normal, *offset),
    }
}

/// Evaluates `s` at every stored time instant of the backend.
///
/// Time-invariant expressions are evaluated once and the slice is shared.
pub fn evaluate_timed<B: Backend>(
    s: &SetExpr,
    backend: &B,
    m: &PropositionMap,
) -> Result<TimedSet<B::Slice>, EvalError> {
    let times = backend.times().clone();
    if s.is_time_invariant(m)? {
        let slice = Arc::new(evaluate(s, backend, m, times[0])?);
        return Ok(TimedSet::constant(times, slice));
    }
    let slices = times
        .iter()
        .map(|&t| evaluate(s, backend, m, t).map(Arc::new))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TimedSet::new(times, slices))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space2() -> StateSpace {
        StateSpace::new(vec![Axis::new("x", -100.0, 100.0), Axis::new("y", -10.0, 10.0)]).unwrap()
    }

    #[test]
    fn json_encoding_of_moving_box() {
        let text = r#"{"kind":"box","bounds":{"x":{"lo":{"offset":0,"rate":16},"hi":{"offset":40,"rate":16}},"y":{"hi":0}}}"#;
        let s: SetExpr = serde_json::from_str(text).unwrap();
        let SetExpr::Box { bounds } = &s else { panic!() };
        assert_eq!(bounds["x"].lo, Some(AffineInTime { offset: 0.0, rate: 16.0 }));
        assert_eq!(bounds["y"].hi, Some(AffineInTime::constant(0.0)));
        assert_eq!(bounds["y"].lo, None);
        let back: SetExpr = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(!s.is_time_invariant(&PropositionMap::new()).unwrap());
    }

    #[test]
    fn json_composites() {
        let text = r#"{"kind":"union","args":[{"kind":"ref","name":"goal"},{"kind":"complement","arg":{"kind":"full"}},{"kind":"halfspace","normal":{"y":1},"offset":0}]}"#;
        let s: SetExpr = serde_json::from_str(text).unwrap();
        assert_eq!(s.refs().into_iter().collect::<Vec<_>>(), vec!["goal".to_string()]);
        assert!(serde_json::from_str::<SetExpr>(r#"{"kind":"blob"}"#).is_err());
    }

    #[test]
    fn leaf_instantiation_at_time() {
        let d = SetExpr::boxed([
            ("x", AxisBounds::moving(AffineInTime { offset: 0.0, rate: 16.0 }, AffineInTime { offset: 40.0, rate: 16.0 })),
            ("y", AxisBounds::below(0.0).open()),
        ]);
        let leaf = d.leaf_at(&space2(), 2.0).unwrap().unwrap();
        assert_eq!(
            leaf,
            Leaf::Box(vec![
                Interval { lo: Some(32.0), hi: Some(72.0) },
                Interval { lo: None, hi: Some(0.0) },
            ])
        );
    }

    #[test]
    fn bind_detects_cycles_and_shadows() {
        let m = PropositionMap::new();
        assert!(matches!(
            m.bind("a", SetExpr::reference("a")),
            Err(SetExprError::CycleError(_))
        ));
        let m = m.bind("a", SetExpr::reference("b")).unwrap();
        assert!(matches!(
            m.bind("b", SetExpr::union(vec![SetExpr::FullSpace, SetExpr::reference("a")])),
            Err(SetExprError::CycleError(_))
        ));
        let m = PropositionMap::new().bind("p", SetExpr::FullSpace).unwrap();
        let m = m.bind("p", SetExpr::EmptySet).unwrap();
        assert_eq!(m.resolve("p").unwrap(), &SetExpr::EmptySet);
        assert!(m.bind("not", SetExpr::FullSpace).is_err());
    }

    #[test]
    fn goal_binding_from_overtaking_scenario() {
        let goal = SetExpr::boxed([
            ("x", AxisBounds { lo: Some(AffineInTime { offset: 40.0, rate: 16.0 }), lo_open: true, ..Default::default() }),
            ("y", AxisBounds::below(0.0).open()),
        ]);
        let m = PropositionMap::new().bind("goal", goal).unwrap();
        assert_eq!(m.len(), 1);
        m.validate(&space2(), (0.0, 10.0)).unwrap();
    }

    #[test]
    fn validation_errors() {
        let sp = space2();
        let bad_axis = SetExpr::boxed([("z", AxisBounds::closed(0.0, 1.0))]);
        assert!(matches!(bad_axis.validate(&sp, (0.0, 1.0)), Err(SetExprError::UnknownAxis(_))));
        let crossing = SetExpr::boxed([(
            "x",
            AxisBounds::moving(AffineInTime { offset: 0.0, rate: 2.0 }, AffineInTime::constant(5.0)),
        )]);
        assert!(crossing.validate(&sp, (0.0, 1.0)).is_ok());
        assert!(crossing.validate(&sp, (0.0, 10.0)).is_err());
        let zero = SetExpr::Halfspace { normal: Normal::Dense(vec![0.0, 0.0]), offset: 1.0 };
        assert!(zero.validate(&sp, (0.0, 1.0)).is_err());
        let m = PropositionMap::new().bind("a", SetExpr::reference("b")).unwrap();
        assert!(matches!(m.validate(&sp, (0.0, 1.0)), Err(SetExprError::UnboundProposition(_))));
    }

    #[test]
    fn state_space_rules() {
        assert!(StateSpace::new(vec![]).is_err());
        assert!(StateSpace::new(vec![Axis::new("x", 1.0, 1.0)]).is_err());
        assert!(StateSpace::new(vec![Axis::new("x", 0.0, 1.0), Axis::new("x", 0.0, 1.0)]).is_err());
        let sp = space2();
        assert!(sp.contains(&[0.0, 10.0]));
        assert!(!sp.contains(&[0.0, 10.5]));
        assert!(!sp.contains(&[0.0]));
    }
}
