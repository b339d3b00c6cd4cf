//! On-disk result formats.
//!
//! Level sets: `header.json` plus `values.bin` (little-endian `f64`, time-major,
//! C order). Hybrid zonotopes: `hz_result.json`, one object per step with
//! row-major matrices, plus `hz_meta.json`. Both write `stats.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{nearest_index, Backend, BackendError, TimedSet};
use crate::hj::grid::{Grid, GridAxis};
use crate::hj::{HjBackend, MEMBER_TOL};
use crate::hz::{HybridZonotope, HzBackend};

pub const HJ_HEADER: &str = "header.json";
pub const HJ_VALUES: &str = "values.bin";
pub const HZ_RESULT: &str = "hz_result.json";
pub const HZ_META: &str = "hz_meta.json";
pub const STATS: &str = "stats.json";

#[derive(Debug, Error)]
pub enum ResultError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed result JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid result: {0}")]
    Invalid(String),
    #[error("state or time outside the result domain")]
    OutOfDomain,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjHeader {
    pub axes: Vec<String>,
    pub bounds: Vec<[f64; 2]>,
    pub shape: Vec<usize>,
    pub periodic: Vec<bool>,
    pub times: Vec<f64>,
    pub order: String,
    pub dtype: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ResultError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_stats(dir: &Path, stats: &BTreeMap<String, serde_json::Value>) -> Result<(), ResultError> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join(STATS), stats)
}

pub fn write_hj(dir: &Path, backend: &HjBackend, set: &TimedSet<Vec<f64>>) -> Result<(), ResultError> {
    fs::create_dir_all(dir)?;
    let grid = backend.grid();
    let header = HjHeader {
        axes: backend.space().axes().iter().map(|a| a.name.clone()).collect(),
        bounds: grid.axes().iter().map(|a| [a.lower, a.upper]).collect(),
        shape: grid.shape().to_vec(),
        periodic: grid.axes().iter().map(|a| a.periodic).collect(),
        times: set.times().to_vec(),
        order: "C".into(),
        dtype: "f64-le".into(),
    };
    write_json(&dir.join(HJ_HEADER), &header)?;
    let mut bytes = Vec::with_capacity(set.len() * grid.len() * 8);
    for s in set.slices() {
        for v in s.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(dir.join(HJ_VALUES), bytes)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HzMeta {
    pub axes: Vec<String>,
    pub bounds: Vec<[f64; 2]>,
    pub times: Vec<f64>,
    pub dt: f64,
    pub binary_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct HzStep {
    pub k: usize,
    pub Gc: Vec<Vec<f64>>,
    pub Gb: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub Ac: Vec<Vec<f64>>,
    pub Ab: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>, ResultError> {
    if r.len() != nrows || r.iter().any(|row| row.len() != ncols) {
        return Err(ResultError::Invalid("matrix shape inconsistent with hybrid zonotope".into()));
    }
    Ok(DMatrix::from_row_iterator(nrows, ncols, r.iter().flatten().copied()))
}

impl HzStep {
    pub fn from_zonotope(k: usize, z: &HybridZonotope) -> Self {
        HzStep {
            k,
            Gc: rows(&z.gc),
            Gb: rows(&z.gb),
            c: z.c.iter().copied().collect(),
            Ac: rows(&z.ac),
            Ab: rows(&z.ab),
            b: z.b.iter().copied().collect(),
        }
    }

    /// Rebuilds the set; column counts come from the generator matrices, or the
    /// constraint matrices when the dimension is zero.
    pub fn to_zonotope(&self) -> Result<HybridZonotope, ResultError> {
        let n = self.c.len();
        let nc = self.b.len();
        let width = |g: &[Vec<f64>], a: &[Vec<f64>]| {
            g.first().or(a.first()).map_or(0, |row| row.len())
        };
        let ng = width(&self.Gc, &self.Ac);
        let nb = width(&self.Gb, &self.Ab);
        Ok(HybridZonotope::new(
            from_rows(&self.Gc, n, ng)?,
            from_rows(&self.Gb, n, nb)?,
            DVector::from_column_slice(&self.c),
            from_rows(&self.Ac, nc, ng)?,
            from_rows(&self.Ab, nc, nb)?,
            DVector::from_column_slice(&self.b),
        )?)
    }
}

pub fn write_hz(dir: &Path, backend: &HzBackend, set: &TimedSet<HybridZonotope>) -> Result<(), ResultError> {
    fs::create_dir_all(dir)?;
    let meta = HzMeta {
        axes: backend.space().axes().iter().map(|a| a.name.clone()).collect(),
        bounds: backend.space().axes().iter().map(|a| [a.lower, a.upper]).collect(),
        times: set.times().to_vec(),
        dt: backend.system().dt,
        binary_cap: backend.binary_cap(),
    };
    write_json(&dir.join(HZ_META), &meta)?;
    let steps: Vec<HzStep> = set
        .slices()
        .iter()
        .enumerate()
        .map(|(k, z)| HzStep::from_zonotope(k, z))
        .collect();
    fs::write(dir.join(HZ_RESULT), serde_json::to_string(&steps)? + "\n")?;
    Ok(())
}

/// A level-set result read back from disk.
#[derive(Debug, Clone)]
pub struct HjResult {
    pub header: HjHeader,
    pub grid: Grid,
    values: Vec<f64>,
}

impl HjResult {
    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }
}

#[derive(Debug, Clone)]
pub struct HzResult {
    pub meta: HzMeta,
    pub sets: Vec<HybridZonotope>,
}

/// Either result kind, detected from the files present.
#[derive(Debug, Clone)]
pub enum StoredResult {
    Hj(HjResult),
    Hz(HzResult),
}

impl StoredResult {
    pub fn load(dir: &Path) -> Result<StoredResult, ResultError> {
        if dir.join(HJ_HEADER).exists() {
            let header: HjHeader = serde_json::from_str(&fs::read_to_string(dir.join(HJ_HEADER))?)?;
            let n = header.shape.len();
            if header.bounds.len() != n || header.periodic.len() != n || header.axes.len() != n {
                return Err(ResultError::Invalid("header axis lists differ in length".into()));
            }
            let grid = Grid::new(
                (0..n)
                    .map(|i| GridAxis {
                        lower: header.bounds[i][0],
                        upper: header.bounds[i][1],
                        count: header.shape[i],
                        periodic: header.periodic[i],
                    })
                    .collect(),
            )?;
            let bytes = fs::read(dir.join(HJ_VALUES))?;
            if bytes.len() != header.times.len() * grid.len() * 8 {
                return Err(ResultError::Invalid("values.bin size does not match header".into()));
            }
            let values = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            Ok(StoredResult::Hj(HjResult { header, grid, values }))
        } else if dir.join(HZ_META).exists() {
            let meta: HzMeta = serde_json::from_str(&fs::read_to_string(dir.join(HZ_META))?)?;
            let steps: Vec<HzStep> = serde_json::from_str(&fs::read_to_string(dir.join(HZ_RESULT))?)?;
            if steps.len() != meta.times.len() {
                return Err(ResultError::Invalid("hz_result.json step count differs from meta".into()));
            }
            let sets = steps.iter().map(|s| s.to_zonotope()).collect::<Result<_, _>>()?;
            Ok(StoredResult::Hz(HzResult { meta, sets }))
        } else {
            Err(ResultError::Invalid(format!("{} holds no result files", dir.display())))
        }
    }

    pub fn axes(&self) -> &[String] {
        match self {
            StoredResult::Hj(r) => &r.header.axes,
            StoredResult::Hz(r) => &r.meta.axes,
        }
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        match self {
            StoredResult::Hj(r) => &r.header.bounds,
            StoredResult::Hz(r) => &r.meta.bounds,
        }
    }

    pub fn times(&self) -> &[f64] {
        match self {
            StoredResult::Hj(r) => &r.header.times,
            StoredResult::Hz(r) => &r.meta.times,
        }
    }

    pub fn time_index(&self, t: f64) -> Result<usize, ResultError> {
        nearest_index(self.times(), t).ok_or(ResultError::OutOfDomain)
    }

    /// Interpolated value (level sets only) at stored index `k`.
    pub fn value(&self, k: usize, z: &[f64]) -> Option<f64> {
        match self {
            StoredResult::Hj(r) => r.grid.interpolate(r.slice(k), z),
            StoredResult::Hz(_) => None,
        }
    }

    pub fn member(&self, z: &[f64], t: f64) -> Result<bool, ResultError> {
        let in_bounds = z.len() == self.bounds().len()
            && z.iter().zip(self.bounds()).all(|(v, [lo, hi])| *v >= *lo && *v <= *hi);
        if !in_bounds {
            return Err(ResultError::OutOfDomain);
        }
        let k = self.time_index(t)?;
        self.member_at(k, z)
    }

    pub fn member_at(&self, k: usize, z: &[f64]) -> Result<bool, ResultError> {
        match self {
            StoredResult::Hj(r) => {
                let v = r.grid.interpolate(r.slice(k), z).ok_or(ResultError::OutOfDomain)?;
                Ok(v <= MEMBER_TOL)
            }
            StoredResult::Hz(r) => Ok(r.sets[k].contains(z, r.meta.binary_cap)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hz_step_round_trip_keeps_empty_shapes() {
        let z = HybridZonotope::from_box(&[-1.0, 0.0], &[1.0, 2.0]).unwrap();
        let back = HzStep::from_zonotope(0, &z).to_zonotope().unwrap();
        assert_eq!(back, z);
        let e = HybridZonotope::empty(2);
        assert_eq!(HzStep::from_zonotope(3, &e).to_zonotope().unwrap(), e);
        let u = z.union(&HybridZonotope::from_box(&[3.0, 3.0], &[4.0, 4.0]).unwrap()).unwrap();
        assert_eq!(HzStep::from_zonotope(1, &u).to_zonotope().unwrap(), u);
    }
}
