//! Temporal logic trees: construction from a formula and a primitive set,
//! approximation-direction analysis, backend compatibility checks, and
//! realization by orchestrating backend procedures.
//!
//! A tree alternates set nodes and operator nodes. The root and every leaf are
//! set nodes; leaves denote `top` or an atomic proposition bound through a
//! [`PropositionMap`].
//!
//! The soundness rule is encoded per primitive: each argument of a primitive
//! declares whether it accepts a subtree containing an approximated (non-exact)
//! temporal operator. A backend whose `G` does not accept such children rejects
//! `(G (F s))` at the `G` node, while `(G s)` passes.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendCapabilities, BackendError, Procedure, TimedSet};
use crate::formula::{Formula, Fragment, NnfError};
use crate::setexpr::{evaluate_timed, EvalError, PropositionMap, SetExpr};

/// Approximation direction of a computed set relative to the true set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ApproxDir {
    Exact,
    Under,
    Over,
}

impl ApproxDir {
    /// Half-lattice join; `None` when an under- and an over-approximation meet.
    pub fn join(self, other: ApproxDir) -> Option<ApproxDir> {
        use ApproxDir::*;
        match (self, other) {
            (Exact, d) | (d, Exact) => Some(d),
            (Under, Under) => Some(Under),
            (Over, Over) => Some(Over),
            _ => None,
        }
    }

    pub fn complement(self) -> ApproxDir {
        match self {
            ApproxDir::Exact => ApproxDir::Exact,
            ApproxDir::Under => ApproxDir::Over,
            ApproxDir::Over => ApproxDir::Under,
        }
    }
}

impl fmt::Display for ApproxDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApproxDir::Exact => "EXACT",
            ApproxDir::Under => "UNDER",
            ApproxDir::Over => "OVER",
        })
    }
}

/// Connective tags, one per formula variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Connective {
    #[serde(rename = "top")]
    Top,
    #[serde(rename = "prop")]
    Prop,
    #[serde(rename = "not")]
    Not,
    #[serde(rename = "and")]
    And,
    #[serde(rename = "or")]
    Or,
    #[serde(rename = "U")]
    Until,
    #[serde(rename = "X")]
    Next,
    #[serde(rename = "F")]
    Eventually,
    #[serde(rename = "G")]
    Always,
}

impl Connective {
    pub fn of(f: &Formula) -> Connective {
        match f {
            Formula::Top => Connective::Top,
            Formula::Prop(_) => Connective::Prop,
            Formula::Not(_) => Connective::Not,
            Formula::And(..) => Connective::And,
            Formula::Or(..) => Connective::Or,
            Formula::Until(..) => Connective::Until,
            Formula::Next(_) => Connective::Next,
            Formula::Eventually(_) => Connective::Eventually,
            Formula::Always(_) => Connective::Always,
        }
    }

    pub fn is_temporal(self) -> bool {
        matches!(
            self,
            Connective::Until | Connective::Next | Connective::Eventually | Connective::Always
        )
    }

    pub fn arity(self) -> usize {
        match self {
            Connective::Top | Connective::Prop => 0,
            Connective::Not | Connective::Next | Connective::Eventually | Connective::Always => 1,
            Connective::And | Connective::Or | Connective::Until => 2,
        }
    }
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("tag serializes");
        f.write_str(s.as_str().expect("string tag"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimitiveSpec {
    pub procedures: Vec<Procedure>,
    /// Output direction given exact inputs.
    pub direction: ApproxDir,
    /// Per argument: whether a child subtree may contain a non-exact temporal operator.
    pub accepts_approximate_temporal_children: Vec<bool>,
}

impl PrimitiveSpec {
    pub fn new(procedures: &[Procedure], direction: ApproxDir, accepts: &[bool]) -> Self {
        PrimitiveSpec {
            procedures: procedures.to_vec(),
            direction,
            accepts_approximate_temporal_children: accepts.to_vec(),
        }
    }
}

/// Operational semantics for a fragment: one primitive per connective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimitiveSet {
    pub name: String,
    pub fragment: Fragment,
    /// Formulas are rewritten to negation normal form before construction.
    pub requires_nnf: bool,
    /// Realize `F φ` as `top U φ` instead of a native primitive.
    pub eventually_via_until: bool,
    pub primitives: BTreeMap<Connective, PrimitiveSpec>,
}

impl PrimitiveSet {
    /// A primitive set whose every primitive is exact and accepts any child.
    ///
    /// Useful as a reference semantics for structural checks.
    pub fn exact(fragment: Fragment) -> PrimitiveSet {
        use Procedure::*;
        let mut p = BTreeMap::new();
        p.insert(Connective::Top, PrimitiveSpec::new(&[Full], ApproxDir::Exact, &[]));
        p.insert(Connective::Prop, PrimitiveSpec::new(&[MakeBox], ApproxDir::Exact, &[]));
        p.insert(Connective::Not, PrimitiveSpec::new(&[Complement], ApproxDir::Exact, &[true]));
        p.insert(Connective::And, PrimitiveSpec::new(&[Intersect], ApproxDir::Exact, &[true, true]));
        p.insert(Connective::Or, PrimitiveSpec::new(&[Union], ApproxDir::Exact, &[true, true]));
        p.insert(Connective::Until, PrimitiveSpec::new(&[Reach], ApproxDir::Exact, &[true, true]));
        p.insert(Connective::Eventually, PrimitiveSpec::new(&[Reach], ApproxDir::Exact, &[true]));
        p.insert(Connective::Always, PrimitiveSpec::new(&[Reach], ApproxDir::Exact, &[true]));
        if fragment == Fragment::Ltl {
            p.insert(Connective::Next, PrimitiveSpec::new(&[NextPred], ApproxDir::Exact, &[true]));
        }
        PrimitiveSet {
            name: "exact".into(),
            fragment,
            requires_nnf: false,
            eventually_via_until: true,
            primitives: p,
        }
    }

    pub fn get(&self, c: Connective) -> Option<&PrimitiveSpec> {
        self.primitives.get(&c)
    }

    pub fn validate(&self) -> Result<(), String> {
        for c in [Connective::Top, Connective::Prop] {
            if !self.primitives.contains_key(&c) {
                return Err(format!("primitive set `{}` lacks the atomic case `{c}`", self.name));
            }
        }
        for (c, spec) in &self.primitives {
            if spec.accepts_approximate_temporal_children.len() != c.arity() {
                return Err(format!("primitive `{c}` declares the wrong number of argument flags"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TltError {
    #[error("subformula `{0}` is outside the fragment")]
    FragmentError(String),
    #[error("unbound proposition `{0}`")]
    UnboundProposition(String),
    #[error("approximation directions conflict at `{0}`")]
    DirectionConflict(String),
    #[error(transparent)]
    Nnf(#[from] NnfError),
    #[error("no primitive for `{0}`")]
    NoPrimitive(Connective),
    #[error("invalid primitive set: {0}")]
    InvalidPrimitiveSet(String),
    #[error("backend lacks procedures {missing:?} needed at `{node}`")]
    IncompatibleBackend { node: String, missing: Vec<Procedure> },
    #[error("unsound realization rejected at `{node}`: {reason}")]
    UnsoundRealization { node: String, reason: String },
    #[error("at `{node}`: {source}")]
    Backend { node: String, source: BackendError },
    #[error("at `{node}`: {source}")]
    Eval { node: String, source: EvalError },
    #[error("state or time outside the domain")]
    OutOfDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeafKind {
    Top,
    Prop { name: String, expr: SetExpr },
}

type CacheEntry = (u64, Arc<dyn Any + Send + Sync>);

#[derive(Debug)]
pub enum SetNodeKind {
    Leaf(LeafKind),
    Inner(Box<OperatorNode>),
}

#[derive(Debug)]
pub struct SetNode {
    /// The formula this node's set represents.
    pub label: Formula,
    pub approx: ApproxDir,
    pub kind: SetNodeKind,
    cache: Mutex<Option<CacheEntry>>,
}

#[derive(Debug)]
pub struct OperatorNode {
    pub op: Connective,
    pub children: Vec<SetNode>,
}

impl SetNode {
    fn new(label: Formula, approx: ApproxDir, kind: SetNodeKind) -> Self {
        SetNode {
            label,
            approx,
            kind,
            cache: Mutex::new(None),
        }
    }

    pub fn operator(&self) -> Option<&OperatorNode> {
        match &self.kind {
            SetNodeKind::Inner(op) => Some(op),
            SetNodeKind::Leaf(_) => None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, SetNodeKind::Leaf(_))
    }

    /// Whether this subtree contains a temporal operator with a non-exact result.
    pub fn has_approximate_temporal(&self) -> bool {
        self.first_approximate_temporal().is_some()
    }

    fn first_approximate_temporal(&self) -> Option<&SetNode> {
        let op = self.operator()?;
        if op.op.is_temporal() && self.approx != ApproxDir::Exact {
            return Some(self);
        }
        op.children.iter().find_map(|c| c.first_approximate_temporal())
    }

    pub fn leaf_count(&self) -> usize {
        match &self.kind {
            SetNodeKind::Leaf(_) => 1,
            SetNodeKind::Inner(op) => op.children.iter().map(|c| c.leaf_count()).sum(),
        }
    }

    /// Drops cached realizations in this subtree.
    pub fn clear_cache(&self) {
        *self.cache.lock().expect("cache lock") = None;
        if let Some(op) = self.operator() {
            op.children.iter().for_each(|c| c.clear_cache());
        }
    }

    fn cached<S: Send + Sync + 'static>(&self, instance: u64) -> Option<TimedSet<S>> {
        let guard = self.cache.lock().expect("cache lock");
        let (id, value) = guard.as_ref()?;
        if *id != instance {
            return None;
        }
        value.downcast_ref::<TimedSet<S>>().cloned()
    }

    fn store<S: Send + Sync + 'static>(&self, instance: u64, set: &TimedSet<S>) {
        *self.cache.lock().expect("cache lock") = Some((instance, Arc::new(set.clone())));
    }
}

/// A constructed tree together with the inputs it was built from.
#[derive(Debug)]
pub struct Tlt {
    pub root: SetNode,
    pub formula: Formula,
    pub primitives: PrimitiveSet,
    pub propositions: PropositionMap,
}

/// Builds a tree for `f` using the primitives in `q` and the bindings in `m`.
pub fn construct(f: &Formula, q: &PrimitiveSet, m: &PropositionMap) -> Result<Tlt, TltError> {
    q.validate().map_err(TltError::InvalidPrimitiveSet)?;
    if let Some(bad) = f.first_outside(q.fragment) {
        return Err(TltError::FragmentError(bad.render()));
    }
    let f = if q.requires_nnf { f.to_nnf()? } else { f.clone() };
    let root = build(&f, q, m)?;
    Ok(Tlt {
        root,
        formula: f,
        primitives: q.clone(),
        propositions: m.clone(),
    })
}

fn build(f: &Formula, q: &PrimitiveSet, m: &PropositionMap) -> Result<SetNode, TltError> {
    let c = Connective::of(f);
    let spec = q.get(c).ok_or(TltError::NoPrimitive(c))?;
    match f {
        Formula::Top => Ok(SetNode::new(f.clone(), spec.direction, SetNodeKind::Leaf(LeafKind::Top))),
        Formula::Prop(name) => {
            let expr = m
                .resolve(name)
                .map_err(|_| TltError::UnboundProposition(name.clone()))?
                .clone();
            Ok(SetNode::new(
                f.clone(),
                spec.direction,
                SetNodeKind::Leaf(LeafKind::Prop { name: name.clone(), expr }),
            ))
        }
        Formula::Eventually(inner) if q.eventually_via_until => {
            let until = q.get(Connective::Until).ok_or(TltError::NoPrimitive(Connective::Until))?;
            let children = vec![build(&Formula::Top, q, m)?, build(inner, q, m)?];
            let dir = fold_direction(Connective::Until, until.direction, children.iter().map(|c| c.approx))
                .ok_or_else(|| TltError::DirectionConflict(f.render()))?;
            Ok(SetNode::new(
                f.clone(),
                dir,
                SetNodeKind::Inner(Box::new(OperatorNode { op: Connective::Until, children })),
            ))
        }
        _ => {
            let children = f
                .children()
                .into_iter()
                .map(|g| build(g, q, m))
                .collect::<Result<Vec<_>, _>>()?;
            let dir = fold_direction(c, spec.direction, children.iter().map(|c| c.approx))
                .ok_or_else(|| TltError::DirectionConflict(f.render()))?;
            Ok(SetNode::new(
                f.clone(),
                dir,
                SetNodeKind::Inner(Box::new(OperatorNode { op: c, children })),
            ))
        }
    }
}

/// One step of the direction fold: the output direction of an operator node.
pub fn fold_direction(
    op: Connective,
    declared: ApproxDir,
    children: impl IntoIterator<Item = ApproxDir>,
) -> Option<ApproxDir> {
    let mut acc = declared;
    for d in children {
        let d = if op == Connective::Not { d.complement() } else { d };
        acc = acc.join(d)?;
    }
    Some(acc)
}

/// Recomputes the direction of `node` bottom-up.
pub fn approx_direction(node: &SetNode, q: &PrimitiveSet) -> Result<ApproxDir, TltError> {
    let mut leaf = |_: usize, n: &SetNode| n.approx;
    direction_with(node, q, &mut leaf, &mut 0)
}

/// Recomputes the direction of `node` with leaf directions supplied by `leaf_dir`.
///
/// Leaves are numbered left to right starting at zero.
pub fn approx_direction_with(
    node: &SetNode,
    q: &PrimitiveSet,
    leaf_dir: &mut dyn FnMut(usize) -> ApproxDir,
) -> Result<ApproxDir, TltError> {
    let mut leaf = |i: usize, _: &SetNode| leaf_dir(i);
    direction_with(node, q, &mut leaf, &mut 0)
}

fn direction_with(
    node: &SetNode,
    q: &PrimitiveSet,
    leaf: &mut dyn FnMut(usize, &SetNode) -> ApproxDir,
    counter: &mut usize,
) -> Result<ApproxDir, TltError> {
    match &node.kind {
        SetNodeKind::Leaf(_) => {
            let d = leaf(*counter, node);
            *counter += 1;
            Ok(d)
        }
        SetNodeKind::Inner(op) => {
            let spec = q.get(op.op).ok_or(TltError::NoPrimitive(op.op))?;
            let mut dirs = Vec::with_capacity(op.children.len());
            for c in &op.children {
                dirs.push(direction_with(c, q, leaf, counter)?);
            }
            fold_direction(op.op, spec.direction, dirs)
                .ok_or_else(|| TltError::DirectionConflict(node.label.render()))
        }
    }
}

/// Checks the set/operator alternation and label consistency of a tree.
pub fn validate_tree(node: &SetNode) -> Result<(), String> {
    match &node.kind {
        SetNodeKind::Leaf(LeafKind::Top) => match node.label {
            Formula::Top => Ok(()),
            _ => Err(format!("top leaf labelled `{}`", node.label)),
        },
        SetNodeKind::Leaf(LeafKind::Prop { name, .. }) => match &node.label {
            Formula::Prop(p) if p == name => Ok(()),
            other => Err(format!("proposition leaf `{name}` labelled `{other}`")),
        },
        SetNodeKind::Inner(op) => {
            if op.children.len() != op.op.arity() {
                return Err(format!("`{}` node has {} children", op.op, op.children.len()));
            }
            let labels: Vec<&Formula> = op.children.iter().map(|c| &c.label).collect();
            let consistent = match (&node.label, op.op) {
                (Formula::Eventually(a), Connective::Until) => {
                    *labels[0] == Formula::Top && **a == *labels[1]
                }
                (f, c) => Connective::of(f) == c && f.children() == labels,
            };
            if !consistent {
                return Err(format!("operator `{}` does not match label `{}`", op.op, node.label));
            }
            op.children.iter().try_for_each(validate_tree)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Reject,
    Incompatible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeReport {
    pub formula: String,
    pub required_procs: Vec<Procedure>,
    pub missing: Vec<Procedure>,
    pub direction: ApproxDir,
    pub verdict: Verdict,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatReport {
    pub primitives: String,
    pub verdict: Verdict,
    pub nodes: Vec<NodeReport>,
}

impl CompatReport {
    /// The first node carrying the overall verdict, if it is not a pass.
    pub fn offending(&self) -> Option<&NodeReport> {
        if self.verdict == Verdict::Pass {
            return None;
        }
        self.nodes.iter().find(|n| n.verdict == self.verdict)
    }
}

/// Lists required and missing procedures and the soundness verdict of every node.
pub fn check_compat(tree: &Tlt, caps: &BackendCapabilities) -> CompatReport {
    let mut nodes = Vec::new();
    report_node(&tree.root, tree, caps, &mut nodes);
    let verdict = if nodes.iter().any(|n| n.verdict == Verdict::Incompatible) {
        Verdict::Incompatible
    } else if nodes.iter().any(|n| n.verdict == Verdict::Reject) {
        Verdict::Reject
    } else {
        Verdict::Pass
    };
    CompatReport {
        primitives: tree.primitives.name.clone(),
        verdict,
        nodes,
    }
}

fn report_node(node: &SetNode, tree: &Tlt, caps: &BackendCapabilities, out: &mut Vec<NodeReport>) {
    let mut required: BTreeSet<Procedure> = BTreeSet::new();
    let mut reason = None;
    let mut rejected = false;
    match &node.kind {
        SetNodeKind::Leaf(LeafKind::Top) => {
            required.insert(Procedure::Full);
        }
        SetNodeKind::Leaf(LeafKind::Prop { expr, .. }) => {
            leaf_procedures(expr, &tree.propositions, &mut required, &mut BTreeSet::new());
        }
        SetNodeKind::Inner(op) => {
            if let Some(spec) = tree.primitives.get(op.op) {
                required.extend(spec.procedures.iter().copied());
                for (i, child) in op.children.iter().enumerate() {
                    let accepts = spec.accepts_approximate_temporal_children.get(i).copied().unwrap_or(true);
                    if accepts {
                        continue;
                    }
                    if let Some(t) = child.first_approximate_temporal() {
                        rejected = true;
                        reason = Some(format!(
                            "`{}` requires exact temporal arguments but `{}` is {}",
                            op.op, t.label, t.approx
                        ));
                        break;
                    }
                }
            }
            if op.op == Connective::Not && tree.primitives.requires_nnf {
                if let Some(SetNodeKind::Leaf(LeafKind::Prop { expr, .. })) =
                    op.children.first().map(|c| &c.kind)
                {
                    leaf_procedures(expr, &tree.propositions, &mut required, &mut BTreeSet::new());
                }
            }
        }
    }
    let missing: Vec<Procedure> = required.iter().copied().filter(|p| !caps.has(*p)).collect();
    let verdict = if !missing.is_empty() {
        reason.get_or_insert_with(|| format!("backend lacks {missing:?}"));
        Verdict::Incompatible
    } else if rejected {
        Verdict::Reject
    } else {
        Verdict::Pass
    };
    out.push(NodeReport {
        formula: node.label.render(),
        required_procs: required.into_iter().collect(),
        missing,
        direction: node.approx,
        verdict,
        reason,
    });
    if let Some(op) = node.operator() {
        for c in &op.children {
            report_node(c, tree, caps, out);
        }
    }
}

fn leaf_procedures(
    e: &SetExpr,
    m: &PropositionMap,
    out: &mut BTreeSet<Procedure>,
    seen: &mut BTreeSet<String>,
) {
    match e {
        SetExpr::FullSpace => {
            out.insert(Procedure::Full);
        }
        SetExpr::EmptySet => {
            out.insert(Procedure::EmptySet);
        }
        SetExpr::Box { .. } => {
            out.insert(Procedure::MakeBox);
        }
        SetExpr::Halfspace { .. } => {
            out.insert(Procedure::MakeHalfspace);
        }
        SetExpr::Union { args } | SetExpr::Intersection { args } => {
            out.insert(if matches!(e, SetExpr::Union { .. }) {
                Procedure::Union
            } else {
                Procedure::Intersect
            });
            args.iter().for_each(|a| leaf_procedures(a, m, out, seen));
        }
        SetExpr::Complement { arg } => {
            out.insert(Procedure::Complement);
            leaf_procedures(arg, m, out, seen);
        }
        SetExpr::Ref { name } => {
            if seen.insert(name.clone()) {
                if let Ok(t) = m.resolve(name) {
                    leaf_procedures(t, m, out, seen);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RealizeOptions {
    pub allow_unsound: bool,
}

#[derive(Debug, Clone)]
pub struct RealizationResult<S> {
    pub root: TimedSet<S>,
    pub times: Arc<[f64]>,
    pub approx: ApproxDir,
    pub stats: BTreeMap<String, serde_json::Value>,
}

/// Realizes the root set of `tree` on `backend`.
///
/// Intermediate node sets are cached per backend instance, so realizing the same
/// tree twice on one backend reuses earlier work.
pub fn realize<B: Backend>(
    tree: &Tlt,
    backend: &B,
    opts: RealizeOptions,
) -> Result<RealizationResult<B::Slice>, TltError> {
    let report = check_compat(tree, &backend.capabilities());
    if let Some(bad) = report.offending() {
        match report.verdict {
            Verdict::Incompatible => {
                return Err(TltError::IncompatibleBackend {
                    node: bad.formula.clone(),
                    missing: bad.missing.clone(),
                })
            }
            Verdict::Reject if !opts.allow_unsound => {
                return Err(TltError::UnsoundRealization {
                    node: bad.formula.clone(),
                    reason: bad.reason.clone().unwrap_or_default(),
                })
            }
            _ => {}
        }
    }
    let share_safe = backend.capabilities().share_safe;
    let start = Instant::now();
    let root = realize_node(&tree.root, tree, backend, share_safe)?;
    let wall = start.elapsed().as_secs_f64();
    let mut stats = BTreeMap::new();
    stats.insert("wall_seconds".to_string(), serde_json::json!(wall));
    stats.insert("backend".to_string(), serde_json::json!(backend.id()));
    stats.insert("direction".to_string(), serde_json::json!(tree.root.approx));
    stats.insert("slices".to_string(), serde_json::json!(root.len()));
    for (k, v) in backend.metrics(&root) {
        stats.insert(k, serde_json::json!(v));
    }
    Ok(RealizationResult {
        times: root.times().clone(),
        root,
        approx: tree.root.approx,
        stats,
    })
}

fn realize_node<B: Backend>(
    node: &SetNode,
    tree: &Tlt,
    backend: &B,
    share_safe: bool,
) -> Result<TimedSet<B::Slice>, TltError> {
    if let Some(hit) = node.cached::<B::Slice>(backend.instance()) {
        return Ok(hit);
    }
    let label = || node.label.render();
    let be = |source: BackendError| TltError::Backend { node: label(), source };
    let result = match &node.kind {
        SetNodeKind::Leaf(LeafKind::Top) => backend.full_timed().map_err(be)?,
        SetNodeKind::Leaf(LeafKind::Prop { expr, .. }) => evaluate_timed(expr, backend, &tree.propositions)
            .map_err(|source| TltError::Eval { node: label(), source })?,
        SetNodeKind::Inner(op) => match (op.op, op.children.as_slice()) {
            (Connective::Not, [child]) => match &child.kind {
                // complement at the leaf so leaf-only backends can build it directly
                SetNodeKind::Leaf(LeafKind::Prop { expr, .. }) => evaluate_timed(
                    &SetExpr::complement(expr.clone()),
                    backend,
                    &tree.propositions,
                )
                .map_err(|source| TltError::Eval { node: label(), source })?,
                SetNodeKind::Leaf(LeafKind::Top) => backend.empty_timed().map_err(be)?,
                _ => {
                    let a = realize_node(child, tree, backend, share_safe)?;
                    backend.complement_timed(&a).map_err(be)?
                }
            },
            (c, [left, right]) => {
                let (a, b) = if share_safe {
                    rayon::join(
                        || realize_node(left, tree, backend, share_safe),
                        || realize_node(right, tree, backend, share_safe),
                    )
                } else {
                    (
                        realize_node(left, tree, backend, share_safe),
                        realize_node(right, tree, backend, share_safe),
                    )
                };
                let (a, b) = (a?, b?);
                match c {
                    Connective::And => backend.intersect_timed(&a, &b),
                    Connective::Or => backend.union_timed(&a, &b),
                    Connective::Until => backend.reach(&b, &a),
                    _ => unreachable!("binary connective"),
                }
                .map_err(be)?
            }
            (c, [child]) => {
                let a = realize_node(child, tree, backend, share_safe)?;
                match c {
                    Connective::Always => backend.always(&a),
                    Connective::Next => backend.next(&a),
                    Connective::Eventually => backend.full_timed().and_then(|full| backend.reach(&a, &full)),
                    _ => unreachable!("unary connective"),
                }
                .map_err(be)?
            }
            _ => unreachable!("validated arity"),
        },
    };
    node.store(backend.instance(), &result);
    Ok(result)
}

/// Whether the root set is non-empty at the initial time.
pub fn is_satisfiable<B: Backend>(r: &RealizationResult<B::Slice>, backend: &B) -> Result<bool, BackendError> {
    Ok(!backend.is_empty(r.root.at(0))?)
}

/// Membership of `z` in the root set at the stored instant nearest `t`.
pub fn member<B: Backend>(
    r: &RealizationResult<B::Slice>,
    backend: &B,
    z: &[f64],
    t: f64,
) -> Result<bool, TltError> {
    backend.member_at(&r.root, z, t).map_err(|e| match e {
        BackendError::OutOfDomain => TltError::OutOfDomain,
        source => TltError::Backend {
            node: "root".into(),
            source,
        },
    })
}
