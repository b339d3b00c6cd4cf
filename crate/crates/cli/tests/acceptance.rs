//! Acceptance checks, one printed line per criterion.
//!
//! Runs without the libtest harness so every line is printed even when all
//! checks pass; the process fails if any criterion fails.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tltc_core::formula::{Formula, Fragment};
use tltc_core::hj::grid::{Grid, GridAxis};
use tltc_core::hj::levelset;
use tltc_core::hj::HjBackend;
use tltc_core::hz::{HybridZonotope, LinearSystem};
use tltc_core::results::StoredResult;
use tltc_core::setexpr::{PropositionMap, SetExpr};
use tltc_core::tlt::{construct, validate_tree, TltError};

const CAP: usize = 20;

type Check = Result<String, String>;

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn tltc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tltc"))
        .args(args)
        .output()
        .expect("run tltc")
}

fn realize(spec_name: &str, backend: &str, out: &Path) -> Result<(Output, f64), String> {
    let start = Instant::now();
    let o = tltc(&[
        "realize",
        spec(spec_name).to_str().unwrap(),
        "--backend",
        backend,
        "--out",
        out.to_str().unwrap(),
    ]);
    let secs = start.elapsed().as_secs_f64();
    match o.status.code() {
        Some(0) | Some(1) => Ok((o, secs)),
        c => Err(format!(
            "realize {spec_name} on {backend} exited with {c:?}: {}",
            String::from_utf8_lossy(&o.stderr).trim()
        )),
    }
}

fn load(dir: &Path) -> Result<StoredResult, String> {
    StoredResult::load(dir).map_err(|e| e.to_string())
}

fn hj_mask(r: &StoredResult, k: usize) -> Vec<bool> {
    let StoredResult::Hj(h) = r else { panic!("level-set result expected") };
    h.slice(k).iter().map(|v| *v <= tltc_core::hj::MEMBER_TOL).collect()
}

fn hj_grid(r: &StoredResult) -> Grid {
    let StoredResult::Hj(h) = r else { panic!("level-set result expected") };
    h.grid.clone()
}

/// Viability kernel of the strip for the double integrator with unit braking.
fn braking_kernel(x: f64, v: f64) -> bool {
    let stop = x + v.signum() * v * v / 2.0;
    x.abs() <= 50.0 && v.abs() <= 10.0 && (-50.0..=50.0).contains(&stop)
}

fn criterion_1(work: &Path) -> Check {
    let out = work.join("c1");
    let (o, secs) = realize("phi1_always.json", "hj", &out)?;
    if o.status.code() != Some(0) {
        return Err("root set reported empty".into());
    }
    let r = load(&out)?;
    let grid = hj_grid(&r);
    let mask = hj_mask(&r, 0);
    let (mut diff, mut strip) = (0usize, 0usize);
    let mut z = [0.0; 2];
    for (flat, member) in mask.iter().enumerate() {
        grid.point(flat, &mut z);
        if z[0].abs() <= 50.0 {
            strip += 1;
        }
        if braking_kernel(z[0], z[1]) != *member {
            diff += 1;
        }
    }
    let ratio = diff as f64 / strip as f64;
    let mut monotone = true;
    let mut prev = mask;
    for k in 1..r.times().len() {
        let next = hj_mask(&r, k);
        monotone &= prev.iter().zip(&next).all(|(a, b)| !*a || *b);
        prev = next;
    }
    let detail = format!(
        "symmetric difference {diff}/{strip} in-strip cells ({:.2}%), monotone shrink {monotone}, {secs:.2} s",
        100.0 * ratio
    );
    if ratio <= 0.05 && monotone && secs < 60.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2(work: &Path) -> Check {
    let hj_dir = work.join("c2_hj");
    let hz_dir = work.join("c2_hz");
    realize("phi1_always.json", "hj", &hj_dir)?;
    let (o, secs) = realize("phi1_always.json", "hz", &hz_dir)?;
    if o.status.code() != Some(0) {
        return Err("hz root set reported empty".into());
    }
    let stats: BTreeMap<String, Value> =
        serde_json::from_slice(&std::fs::read(hz_dir.join("stats.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let gens = stats["continuous_generators"].as_f64().unwrap_or(f64::NAN);
    let cons = stats["constraints"].as_f64().unwrap_or(f64::NAN);
    let size_ok = (559.0 / 10.0..=5590.0).contains(&gens) && (478.0 / 10.0..=4780.0).contains(&cons);
    let (hj, hz) = (load(&hj_dir)?, load(&hz_dir)?);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut agree = 0;
    let samples = 2000;
    for _ in 0..samples {
        let z = [rng.gen_range(-100.0..=100.0), rng.gen_range(-10.0..=10.0)];
        let a = hj.member_at(0, &z).map_err(|e| e.to_string())?;
        let b = hz.member_at(0, &z).map_err(|e| e.to_string())?;
        agree += usize::from(a == b);
    }
    let frac = agree as f64 / samples as f64;
    let detail = format!(
        "agreement {:.1}% over {samples} samples, size {gens} generators / {cons} constraints, {secs:.2} s",
        100.0 * frac
    );
    if frac >= 0.9 && size_ok && secs < 30.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3(work: &Path) -> Check {
    let out = work.join("c3");
    realize("phi2_always_eventually.json", "hj", &out)?;
    let r = load(&out)?;
    let frac = |k: usize| {
        let m = hj_mask(&r, k);
        m.iter().filter(|b| **b).count() as f64 / m.len() as f64
    };
    let at0 = frac(0);
    let (mut worst, mut worst_t) = (1.0f64, 0.0);
    let mut last_full = 0.0;
    for (k, &t) in r.times().iter().enumerate().filter(|(_, t)| **t <= 23.0 + 1e-9) {
        let f = frac(k);
        if f < worst {
            worst = f;
            worst_t = t;
        }
        if f >= 0.99 && worst >= 0.99 {
            last_full = t;
        }
    }
    let detail = format!(
        "t=0 members {:.2}%, worst over t<=23 is {:.2}% at t={worst_t:.2}, >=99% holds up to t={last_full:.2}",
        100.0 * at0,
        100.0 * worst
    );
    if at0 >= 0.99 && worst >= 0.99 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4(work: &Path) -> Check {
    let path = spec("phi2_always_eventually.json");
    let check = tltc(&["check", path.to_str().unwrap(), "--backend", "hz"]);
    let out = work.join("c4");
    let real = tltc(&[
        "realize",
        path.to_str().unwrap(),
        "--backend",
        "hz",
        "--out",
        out.to_str().unwrap(),
    ]);
    let names_node = |o: &Output| {
        let err = String::from_utf8_lossy(&o.stderr);
        err.contains("approximation soundness") && err.contains("`(G (F s))`")
    };
    let report: Value = serde_json::from_slice(&check.stdout).map_err(|e| e.to_string())?;
    let first_reject = report["nodes"]
        .as_array()
        .and_then(|n| n.iter().find(|n| n["verdict"] == "REJECT"))
        .map(|n| n["formula"].clone());
    let ok = check.status.code() == Some(2)
        && real.status.code() == Some(2)
        && names_node(&check)
        && names_node(&real)
        && first_reject == Some(Value::from("(G (F s))"))
        && !out.exists();
    let detail = format!(
        "check exit {:?}, realize exit {:?}, rejected node {first_reject:?}, no output written {}",
        check.status.code(),
        real.status.code(),
        !out.exists()
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A finite union of axis-aligned boxes; the interval ground truth.
#[derive(Clone, Debug)]
struct Boxes(Vec<(Vec<f64>, Vec<f64>)>);

impl Boxes {
    /// Signed distance-like margin: positive inside some box.
    fn margin(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|(lo, hi)| {
                x.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(v, (l, h))| (v - l).min(h - v))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn minkowski(&self, o: &Boxes) -> Boxes {
        let mut out = Vec::new();
        for (l1, h1) in &self.0 {
            for (l2, h2) in &o.0 {
                out.push((
                    l1.iter().zip(l2).map(|(a, b)| a + b).collect(),
                    h1.iter().zip(h2).map(|(a, b)| a + b).collect(),
                ));
            }
        }
        Boxes(out)
    }
}

/// A random hybrid zonotope that is exactly a union of boxes: continuous
/// generators are axis-aligned, equality constraints only tie generators along
/// the same axis, and binary constraints tie pairs of binaries.
fn random_box_union(rng: &mut ChaCha8Rng) -> (HybridZonotope, Boxes) {
    let n = 2;
    let ng = rng.gen_range(2..=6);
    let nb = rng.gen_range(0..=3);
    let axis: Vec<usize> = (0..ng).map(|j| if j < n { j } else { rng.gen_range(0..n) }).collect();
    let len: Vec<f64> = (0..ng).map(|_| rng.gen_range(0.2..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let mut gc = DMatrix::zeros(n, ng);
    for j in 0..ng {
        gc[(axis[j], j)] = len[j];
    }
    let gb = DMatrix::from_fn(n, nb, |_, _| rng.gen_range(-3.0..3.0));
    let c = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    // continuous ties xi_i = s xi_j between same-axis generators
    let mut group: Vec<(usize, f64)> = (0..ng).map(|j| (j, 1.0)).collect();
    let mut rows: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for i in n..ng {
        if rng.gen_bool(0.5) {
            if let Some(j) = (0..i).find(|&j| axis[j] == axis[i] && group[j].0 == j) {
                let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let mut r = vec![0.0; ng];
                r[i] = 1.0;
                r[j] = -s;
                rows.push((r, vec![0.0; nb]));
                group[i] = (j, s);
            }
        }
    }
    // binary ties beta_k = beta_l
    let mut tied: Vec<usize> = (0..nb).collect();
    if nb >= 2 && rng.gen_bool(0.5) {
        let mut r = vec![0.0; nb];
        r[1] = 1.0;
        r[0] = -1.0;
        rows.push((vec![0.0; ng], r));
        tied[1] = 0;
    }
    let nc = rows.len();
    let ac = DMatrix::from_fn(nc, ng, |i, j| rows[i].0[j]);
    let ab = DMatrix::from_fn(nc, nb, |i, j| rows[i].1[j]);
    let z = HybridZonotope::new(gc.clone(), gb.clone(), c.clone(), ac, ab, DVector::zeros(nc)).unwrap();

    let mut half = vec![0.0; n];
    let mut combined = vec![0.0; ng];
    for j in 0..ng {
        combined[group[j].0] += group[j].1 * len[j];
    }
    for j in 0..ng {
        half[axis[j]] += combined[j].abs();
    }
    let mut boxes = Vec::new();
    for mask in 0..(1usize << nb) {
        let beta: Vec<f64> = (0..nb).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }).collect();
        if (0..nb).any(|k| beta[k] != beta[tied[k]]) {
            continue;
        }
        let center = &c + &gb * DVector::from_column_slice(&beta);
        boxes.push((
            (0..n).map(|i| center[i] - half[i]).collect(),
            (0..n).map(|i| center[i] + half[i]).collect(),
        ));
    }
    (z, Boxes(boxes))
}

fn random_matrix(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let m: DMatrix<f64> = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-2.0..2.0));
        if m.determinant().abs() > 0.3 {
            return m;
        }
    }
}

fn sample_near(rng: &mut ChaCha8Rng, truth: &Boxes, spread: f64) -> Vec<f64> {
    if rng.gen_bool(0.5) && !truth.0.is_empty() {
        let (lo, hi) = &truth.0[rng.gen_range(0..truth.0.len())];
        lo.iter().zip(hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect()
    } else {
        (0..2).map(|_| rng.gen_range(-spread..spread)).collect()
    }
}

fn criterion_5() -> Check {
    const TOL: f64 = 1e-7;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ops = ["union", "minkowski", "linear map", "generalized intersection"];
    let mut counts = [0usize; 4];
    let mut disagreements = [0usize; 4];
    let mut ambiguous = 0;
    let points_per_op = 500;
    let instances = 50;
    for (o, _) in ops.iter().enumerate() {
        for _ in 0..instances {
            let (za, ta) = random_box_union(&mut rng);
            let (zb, tb) = random_box_union(&mut rng);
            let m = random_matrix(&mut rng);
            let minv = m.clone().try_inverse().unwrap();
            // half the samples come from inside the operand pieces, mapped when needed
            let pieces = match o {
                0 => Boxes(ta.0.iter().chain(&tb.0).cloned().collect()),
                1 => ta.minkowski(&tb),
                _ => ta.clone(),
            };
            let (z, truth): (HybridZonotope, Box<dyn Fn(&[f64]) -> f64>) = match o {
                0 => {
                    let t = Boxes(ta.0.iter().chain(&tb.0).cloned().collect());
                    (za.union(&zb).unwrap(), Box::new(move |x| t.margin(x)))
                }
                1 => {
                    let t = ta.minkowski(&tb);
                    (za.minkowski(&zb).unwrap(), Box::new(move |x| t.margin(x)))
                }
                2 => (
                    za.linear_map(&m).unwrap(),
                    Box::new(move |x| {
                        let y = &minv * DVector::from_column_slice(x);
                        // scale the preimage margin back to image units
                        ta.margin(y.as_slice()) / minv.norm()
                    }),
                ),
                _ => {
                    let mm = m.clone();
                    (
                        za.gen_intersect(&zb, &m).unwrap(),
                        Box::new(move |x| {
                            let y = &mm * DVector::from_column_slice(x);
                            ta.margin(x).min(tb.margin(y.as_slice()) / mm.norm())
                        }),
                    )
                }
            };
            for _ in 0..points_per_op / instances {
                let mut x = sample_near(&mut rng, &pieces, 12.0);
                if o == 2 {
                    x = (&m * DVector::from_column_slice(&x)).as_slice().to_vec();
                }
                let margin = truth(&x);
                if margin.abs() < TOL {
                    ambiguous += 1;
                    continue;
                }
                counts[o] += 1;
                let got = z.contains(&x, CAP).map_err(|e| e.to_string())?;
                if got != (margin > 0.0) {
                    disagreements[o] += 1;
                }
            }
        }
    }
    let total: usize = disagreements.iter().sum();
    let detail = ops
        .iter()
        .zip(counts.iter().zip(&disagreements))
        .map(|(name, (n, d))| format!("{name} {d}/{n}"))
        .collect::<Vec<_>>()
        .join(", ");
    let detail = format!("disagreements: {detail} ({ambiguous} boundary points skipped)");
    if total == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Check {
    let dt = 0.5;
    let sys = LinearSystem::double_integrator(1.0, dt).unwrap();
    let width = [200.0, 20.0];
    let us: Vec<f64> = (0..101).map(|i| -1.0 + 2.0 * i as f64 / 100.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut checked, mut agree, mut banded) = (0usize, 0usize, 0usize);
    for _ in 0..20 {
        let rand_box = |rng: &mut ChaCha8Rng, scale: f64| {
            let cx = rng.gen_range(-60.0..60.0) * scale;
            let cv = rng.gen_range(-6.0..6.0);
            let (hx, hv) = (rng.gen_range(2.0..30.0), rng.gen_range(0.3..4.0));
            (vec![cx - hx, cv - hv], vec![cx + hx, cv + hv])
        };
        let (tl, th) = rand_box(&mut rng, 1.0);
        let (tl2, th2) = rand_box(&mut rng, 1.0);
        let (cl, ch) = rand_box(&mut rng, 0.5);
        let two = rng.gen_bool(0.5);
        let mut target = HybridZonotope::from_box(&tl, &th).unwrap();
        let mut targets = vec![(tl.clone(), th.clone())];
        if two {
            target = target.union(&HybridZonotope::from_box(&tl2, &th2).unwrap()).unwrap();
            targets.push((tl2.clone(), th2.clone()));
        }
        let constraint = HybridZonotope::from_box(&cl, &ch).unwrap();
        let pred = sys.pred(&target, &constraint).map_err(|e| e.to_string())?;
        // normalized margin of a point in a box
        let margin = |z: &[f64], lo: &[f64], hi: &[f64]| {
            (0..2)
                .map(|i| (z[i] - lo[i]).min(hi[i] - z[i]) / width[i])
                .fold(f64::INFINITY, f64::min)
        };
        for _ in 0..100 {
            let z = [
                rng.gen_range(cl[0] - 20.0..ch[0] + 20.0),
                rng.gen_range(cl[1] - 3.0..ch[1] + 3.0),
            ];
            let in_c = margin(&z, &cl, &ch);
            let best = us
                .iter()
                .map(|&u| {
                    let next = [
                        sys.a[(0, 0)] * z[0] + sys.a[(0, 1)] * z[1] + sys.b[(0, 0)] * u,
                        sys.a[(1, 0)] * z[0] + sys.a[(1, 1)] * z[1] + sys.b[(1, 0)] * u,
                    ];
                    targets
                        .iter()
                        .map(|(lo, hi)| margin(&next, lo, hi))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let m = in_c.min(best);
            if m.abs() < 1e-3 {
                banded += 1;
                continue;
            }
            checked += 1;
            if pred.contains(&z, CAP).map_err(|e| e.to_string())? == (m > 0.0) {
                agree += 1;
            }
        }
    }
    let detail = format!("{agree}/{checked} agree, {banded} points in the boundary band skipped");
    if agree == checked && checked > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Check {
    let grid = Grid::new(vec![
        GridAxis { lower: -100.0, upper: 100.0, count: 91, periodic: false },
        GridAxis { lower: -10.0, upper: 10.0, count: 91, periodic: false },
    ])
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 100;
    for _ in 0..trials {
        let a: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let b: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&levelset::complement(&levelset::complement(&a))) != bits(&a) {
            return Err("double complement changed bits".into());
        }
        let lhs = levelset::complement(&levelset::union(&a, &b).unwrap());
        let rhs = levelset::intersect(&levelset::complement(&a), &levelset::complement(&b)).unwrap();
        if bits(&lhs) != bits(&rhs) {
            return Err("not (a or b) differs from (not a) and (not b)".into());
        }
        let lhs = levelset::complement(&levelset::intersect(&a, &b).unwrap());
        let rhs = levelset::union(&levelset::complement(&a), &levelset::complement(&b)).unwrap();
        if bits(&lhs) != bits(&rhs) {
            return Err("not (a and b) differs from (not a) or (not b)".into());
        }
    }
    Ok(format!("{trials} random 91x91 pairs, all laws bit-exact"))
}

fn random_formula(rng: &mut ChaCha8Rng, depth: usize, allow_next: bool) -> Formula {
    let atoms = ["p", "q", "r"];
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.1) {
            Formula::Top
        } else {
            Formula::prop(atoms[rng.gen_range(0..atoms.len())])
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, depth - 1, allow_next);
    match rng.gen_range(0..if allow_next { 8 } else { 7 }) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::until(sub(rng), sub(rng)),
        4 => Formula::eventually(sub(rng)),
        5 => Formula::always(sub(rng)),
        6 => sub(rng),
        _ => Formula::next(sub(rng)),
    }
}

/// Inserts an `X` at a random position of `f`.
fn with_next(rng: &mut ChaCha8Rng, f: Formula) -> Formula {
    if rng.gen_bool(0.3) {
        return Formula::next(f);
    }
    match f {
        Formula::Not(a) => Formula::not(with_next(rng, *a)),
        Formula::And(a, b) if rng.gen_bool(0.5) => Formula::and(with_next(rng, *a), *b),
        Formula::And(a, b) => Formula::and(*a, with_next(rng, *b)),
        Formula::Or(a, b) if rng.gen_bool(0.5) => Formula::or(with_next(rng, *a), *b),
        Formula::Or(a, b) => Formula::or(*a, with_next(rng, *b)),
        Formula::Until(a, b) if rng.gen_bool(0.5) => Formula::until(with_next(rng, *a), *b),
        Formula::Until(a, b) => Formula::until(*a, with_next(rng, *b)),
        Formula::Eventually(a) => Formula::eventually(with_next(rng, *a)),
        Formula::Always(a) => Formula::always(with_next(rng, *a)),
        other => Formula::next(other),
    }
}

fn criterion_8() -> Check {
    let q = HjBackend::primitive_set();
    let mut m = PropositionMap::new();
    for name in ["p", "q", "r"] {
        let expr: SetExpr = serde_json::from_str(r#"{"kind":"box","bounds":{"x":{"lo":-1,"hi":1}}}"#).unwrap();
        m = m.bind(name, expr).map_err(|e| e.to_string())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut valid = 0;
    for _ in 0..1000 {
        let f = random_formula(&mut rng, 6, false);
        assert!(f.in_fragment(Fragment::LtlNoNext));
        let tree = construct(&f, &q, &m).map_err(|e| format!("`{f}` failed to construct: {e}"))?;
        validate_tree(&tree.root).map_err(|e| format!("`{f}` built an invalid tree: {e}"))?;
        valid += 1;
    }
    let mut rejected = 0;
    for _ in 0..1000 {
        let base = random_formula(&mut rng, 5, false);
        let f = with_next(&mut rng, base);
        match construct(&f, &q, &m) {
            Err(TltError::FragmentError(_)) => rejected += 1,
            other => return Err(format!("`{f}` gave {:?} instead of a fragment error", other.err())),
        }
    }
    Ok(format!("{valid}/1000 valid trees, {rejected}/1000 out-of-fragment formulas rejected"))
}

fn criterion_9(work: &Path) -> Check {
    let out = work.join("c9");
    let (o, secs) = realize("overtake.json", "hj", &out)?;
    if o.status.code() != Some(0) {
        return Err(format!("root set reported empty after {secs:.1} s"));
    }
    let r = load(&out)?;
    // right lane, 10 m behind the lead vehicle, moderately faster
    let feasible = [-10.0, -2.0, 0.0, 24.0];
    let member = r.member(&feasible, 0.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let StoredResult::Hj(h) = &r else { return Err("level-set result expected".into()) };
    let (dx, dy) = (h.grid.spacing()[0], h.grid.spacing()[1]);
    let (mut inside_members, mut within_cell) = (0, 0);
    let samples = 500;
    for _ in 0..samples {
        let k = rng.gen_range(0..r.times().len());
        let t = r.times()[k];
        let z = [
            rng.gen_range(16.0 * t..=16.0 * t + 40.0),
            rng.gen_range(-4.5..-1e-6),
            rng.gen_range(-0.5..=0.5),
            rng.gen_range(12.0..=32.0),
        ];
        if r.member_at(k, &z).map_err(|e| e.to_string())? {
            inside_members += 1;
            let edge_x = (z[0] - 16.0 * t).min(16.0 * t + 40.0 - z[0]);
            if edge_x < dx || -z[1] < dy {
                within_cell += 1;
            }
        }
    }
    let detail = format!(
        "{secs:.1} s, feasible state member {member}, {inside_members}/{samples} states inside D are members \
         ({within_cell} of them within one grid cell of the boundary of D)"
    );
    if secs < 900.0 && member && inside_members == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

/// `stats.json` minus the wall-clock measurement.
fn stable_stats(bytes: &[u8]) -> Result<Value, String> {
    let mut v: Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    v.as_object_mut().ok_or("stats.json is not an object")?.remove("wall_seconds");
    Ok(v)
}

fn criterion_10(work: &Path) -> Check {
    let runs = [
        ("phi1_always.json", "hj"),
        ("phi1_always.json", "hz"),
        ("phi2_always_eventually.json", "hj"),
        ("overtake.json", "hj"),
    ];
    let mut compared = 0;
    for (i, (name, backend)) in runs.iter().enumerate() {
        let a = work.join(format!("c10_{i}_a"));
        let b = work.join(format!("c10_{i}_b"));
        realize(name, backend, &a)?;
        realize(name, backend, &b)?;
        let (fa, fb) = (read_dir_sorted(&a)?, read_dir_sorted(&b)?);
        if fa.len() != fb.len() {
            return Err(format!("{name} on {backend}: different file sets"));
        }
        for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
            let same = na == nb
                && if na == "stats.json" {
                    stable_stats(ba)? == stable_stats(bb)?
                } else {
                    ba == bb
                };
            if !same {
                return Err(format!("{name} on {backend}: {na} differs between runs"));
            }
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} files identical across repeated runs of all shipped specs (wall_seconds excluded)"
    ))
}

fn main() {
    let work = tempfile::tempdir().expect("temporary directory");
    let w = work.path();
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Check + '_>)> = vec![
        (1, "always on HJ matches the braking kernel", Box::new(|| criterion_1(w))),
        (2, "always on HZ agrees with HJ", Box::new(|| criterion_2(w))),
        (3, "always-eventually on HJ admits the full space", Box::new(|| criterion_3(w))),
        (4, "always-eventually on HZ is rejected", Box::new(|| criterion_4(w))),
        (5, "hybrid zonotope algebra oracle", Box::new(criterion_5)),
        (6, "predecessor oracle", Box::new(criterion_6)),
        (7, "level-set algebra laws", Box::new(criterion_7)),
        (8, "tree construction fuzz", Box::new(criterion_8)),
        (9, "overtaking case study", Box::new(|| criterion_9(w))),
        (10, "determinism", Box::new(|| criterion_10(w))),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout().lock();
    for (n, name, run) in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(*n);
                ("FAIL", d)
            }
        };
        writeln!(stdout, "criterion {n:>2} {tag}: {name}: {detail} [{secs:.1} s]").unwrap();
        stdout.flush().unwrap();
    }
    if !failed.is_empty() {
        writeln!(stdout, "failed criteria: {failed:?}").unwrap();
        std::process::exit(1);
    }
}
