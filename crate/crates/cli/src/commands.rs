use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use tltc_core::backend::{Backend, BackendError, TimedSet};
use tltc_core::results::{self, ResultError, StoredResult};
use tltc_core::setexpr::EvalError;
use tltc_core::specfile::{Spec, SpecError};
use tltc_core::tlt::{self, check_compat, construct, CompatReport, PrimitiveSet, RealizeOptions, Tlt, TltError, Verdict};
use tltc_core::{hj::HjBackend, hz::HzBackend};

use crate::BackendKind;

/// Points per axis when sampling hybrid zonotope results for a slice.
const HZ_SLICE_SAMPLES: usize = 101;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 3, message: message.into() }
    }

    fn incompatible(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Failure {
        Failure { code: 4, message: message.into() }
    }
}

fn backend_code(e: &BackendError) -> u8 {
    match e {
        BackendError::UnsupportedGeometry(_) | BackendError::Unsupported(_) => 2,
        BackendError::OutOfDomain => 3,
        _ => 4,
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Failure {
        Failure::usage(e.to_string())
    }
}

impl From<ResultError> for Failure {
    fn from(e: ResultError) -> Failure {
        let code = match &e {
            ResultError::Backend(b) => backend_code(b),
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<TltError> for Failure {
    fn from(e: TltError) -> Failure {
        let code = match &e {
            TltError::UnboundProposition(_) | TltError::OutOfDomain => 3,
            TltError::Eval { source, .. } => match source {
                EvalError::UnsupportedGeometry(_) => 2,
                EvalError::Backend(b) => backend_code(b),
                _ => 3,
            },
            TltError::Backend { source, .. } => backend_code(source),
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn print_json(v: &impl serde::Serialize) {
    let text = serde_json::to_string_pretty(v).expect("serializable report");
    println!("{text}");
}

fn primitives(kind: BackendKind) -> PrimitiveSet {
    match kind {
        BackendKind::Hj => HjBackend::primitive_set(),
        BackendKind::Hz => HzBackend::primitive_set(),
    }
}

/// Builds the tree; construction failures still produce a JSON verdict on stdout.
fn build_tree(spec: &Spec, kind: BackendKind) -> Result<Tlt, Failure> {
    construct(&spec.formula, &primitives(kind), &spec.propositions).map_err(|e| {
        let f = Failure::from(e);
        if f.code == 2 {
            print_json(&json!({"error": f.message, "verdict": Verdict::Incompatible}));
        }
        f
    })
}

/// Prints the report and turns a failing verdict into exit code 2.
fn report_verdict(report: &CompatReport, allow_unsound: bool) -> Result<(), Failure> {
    let Some(bad) = report.offending() else {
        return Ok(());
    };
    match report.verdict {
        Verdict::Reject if allow_unsound => {
            eprintln!(
                "tltc: warning: realizing `{}` despite approximation soundness rejection",
                bad.formula
            );
            Ok(())
        }
        Verdict::Reject => Err(Failure::incompatible(format!(
            "approximation soundness: node `{}` rejected: {}",
            bad.formula,
            bad.reason.as_deref().unwrap_or("unsound composition")
        ))),
        _ => Err(Failure::incompatible(format!(
            "node `{}` needs procedures the backend lacks: {}",
            bad.formula,
            bad.missing.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

pub fn check(path: &Path, kind: BackendKind) -> Result<u8, Failure> {
    let spec = Spec::load(path)?;
    let caps = match kind {
        BackendKind::Hj => spec.hj_backend(false)?.capabilities(),
        BackendKind::Hz => spec.hz_backend()?.capabilities(),
    };
    let tree = build_tree(&spec, kind)?;
    let report = check_compat(&tree, &caps);
    print_json(&report);
    report_verdict(&report, false)?;
    Ok(0)
}

fn run<B: Backend>(
    spec: &Spec,
    tree: &Tlt,
    backend: &B,
    allow_unsound: bool,
    out: &Path,
    write: impl FnOnce(&Path, &B, &TimedSet<B::Slice>) -> Result<(), ResultError>,
) -> Result<u8, Failure> {
    let report = check_compat(tree, &backend.capabilities());
    if report.verdict != Verdict::Pass {
        print_json(&report);
    }
    report_verdict(&report, allow_unsound)?;
    let result = tlt::realize(tree, backend, RealizeOptions { allow_unsound })?;
    let satisfiable = tlt::is_satisfiable(&result, backend)
        .map_err(|e| Failure::numeric(format!("emptiness check of the root set: {e}")))?;
    let mut stats: BTreeMap<String, Value> = result.stats.clone();
    stats.insert("satisfiable".into(), json!(satisfiable));
    stats.insert("formula".into(), json!(spec.formula.render()));
    write(out, backend, &result.root).map_err(|e| Failure::numeric(format!("writing results: {e}")))?;
    results::write_stats(out, &stats).map_err(|e| Failure::numeric(format!("writing stats: {e}")))?;
    print_json(&stats);
    Ok(if satisfiable { 0 } else { 1 })
}

pub fn realize(path: &Path, kind: BackendKind, out: &Path, allow_unsound: bool, full_grid: bool) -> Result<u8, Failure> {
    let spec = Spec::load(path)?;
    let tree = build_tree(&spec, kind)?;
    match kind {
        BackendKind::Hj => {
            let b = spec.hj_backend(full_grid)?;
            run(&spec, &tree, &b, allow_unsound, out, results::write_hj)
        }
        BackendKind::Hz => {
            if full_grid {
                return Err(Failure::usage("--full-grid applies to the hj backend only"));
            }
            let b = spec.hz_backend()?;
            run(&spec, &tree, &b, allow_unsound, out, results::write_hz)
        }
    }
}

fn parse_state(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::usage(format!("`{s}` is not a finite number")))
        })
        .collect()
}

pub fn query(dir: &Path, state: &str, t: f64) -> Result<u8, Failure> {
    let stored = StoredResult::load(dir)?;
    let z = parse_state(state)?;
    if z.len() != stored.axes().len() {
        return Err(Failure::usage(format!(
            "state has {} coordinates, result has {} axes",
            z.len(),
            stored.axes().len()
        )));
    }
    let k = stored.time_index(t)?;
    let member = stored.member(&z, t)?;
    print_json(&json!({"member": member, "time": stored.times()[k]}));
    Ok(if member { 0 } else { 1 })
}

fn axis_position(stored: &StoredResult, name: &str) -> Result<usize, Failure> {
    stored
        .axes()
        .iter()
        .position(|a| a == name)
        .ok_or_else(|| Failure::usage(format!("unknown axis `{name}`; result axes are {:?}", stored.axes())))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn slice(dir: &Path, t: f64, axes: &str, fix: Option<&str>, csv_path: Option<&Path>) -> Result<u8, Failure> {
    let stored = StoredResult::load(dir)?;
    let names: Vec<&str> = axes.split(',').map(str::trim).collect();
    let [a1, a2] = names[..] else {
        return Err(Failure::usage("--axes takes exactly two axis names"));
    };
    let (i1, i2) = (axis_position(&stored, a1)?, axis_position(&stored, a2)?);
    if i1 == i2 {
        return Err(Failure::usage("--axes names the same axis twice"));
    }
    let mut z: Vec<Option<f64>> = vec![None; stored.axes().len()];
    for item in fix.unwrap_or("").split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--fix entry `{item}` is not name=value")))?;
        let i = axis_position(&stored, name.trim())?;
        if i == i1 || i == i2 {
            return Err(Failure::usage(format!("axis `{name}` is both sliced and fixed")));
        }
        z[i] = Some(parse_state(value)?[0]);
    }
    if let Some(i) = (0..z.len()).find(|&i| i != i1 && i != i2 && z[i].is_none()) {
        return Err(Failure::usage(format!("axis `{}` needs a value in --fix", stored.axes()[i])));
    }
    let mut point: Vec<f64> = z.iter().map(|v| v.unwrap_or(0.0)).collect();
    if point.iter().zip(stored.bounds()).enumerate().any(|(i, (v, [lo, hi]))| {
        i != i1 && i != i2 && !(*v >= *lo && *v <= *hi)
    }) {
        return Err(Failure::usage("fixed value outside the result bounds"));
    }
    let k = stored.time_index(t)?;
    let (c1, c2, column) = match &stored {
        StoredResult::Hj(r) => {
            let ax = r.grid.axes();
            let coords = |i: usize| (0..ax[i].count).map(|j| ax[i].coord(j)).collect::<Vec<_>>();
            (coords(i1), coords(i2), "value")
        }
        StoredResult::Hz(_) => {
            let b = stored.bounds();
            (
                linspace(b[i1][0], b[i1][1], HZ_SLICE_SAMPLES),
                linspace(b[i2][0], b[i2][1], HZ_SLICE_SAMPLES),
                "member",
            )
        }
    };
    let sink: Box<dyn Write> = match csv_path {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Failure::numeric(format!("writing CSV: {e}"));
    w.write_record([a1, a2, column]).map_err(io)?;
    for &x in &c1 {
        for &y in &c2 {
            point[i1] = x;
            point[i2] = y;
            let cell = match &stored {
                StoredResult::Hj(_) => stored.value(k, &point).ok_or_else(|| Failure::usage("point off the grid"))?,
                StoredResult::Hz(_) => f64::from(u8::from(stored.member_at(k, &point)?)),
            };
            w.write_record([x.to_string(), y.to_string(), cell.to_string()]).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Failure::numeric(format!("writing CSV: {e}")))?;
    Ok(0)
}
