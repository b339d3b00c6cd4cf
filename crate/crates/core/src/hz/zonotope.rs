//! Hybrid zonotopes `<Gc, Gb, c, Ac, Ab, b>`: the set of
//! `Gc xc + Gb xb + c` with `xc in [-1, 1]^ng`, `xb in {-1, 1}^nb` and
//! `Ac xc + Ab xb = b`.

use nalgebra::{DMatrix, DVector};

use super::lp;
use crate::backend::BackendError;

const PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HybridZonotope {
    pub gc: DMatrix<f64>,
    pub gb: DMatrix<f64>,
    pub c: DVector<f64>,
    pub ac: DMatrix<f64>,
    pub ab: DMatrix<f64>,
    pub b: DVector<f64>,
}

fn mismatch(what: &str) -> BackendError {
    BackendError::ShapeMismatch(what.to_string())
}

/// Block-diagonal `[[a, 0], [0, b]]`.
fn blkdiag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

fn hcat(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts.first().map_or(0, |p| p.nrows());
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut m = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        assert_eq!(p.nrows(), rows);
        m.view_mut((0, at), p.shape()).copy_from(*p);
        at += p.ncols();
    }
    m
}

fn vcat(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts.first().map_or(0, |p| p.ncols());
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let mut m = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        assert_eq!(p.ncols(), cols);
        m.view_mut((at, 0), p.shape()).copy_from(*p);
        at += p.nrows();
    }
    m
}

fn vcat_vec(parts: &[&DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
}

impl HybridZonotope {
    pub fn new(
        gc: DMatrix<f64>,
        gb: DMatrix<f64>,
        c: DVector<f64>,
        ac: DMatrix<f64>,
        ab: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<Self, BackendError> {
        let n = c.len();
        if gc.nrows() != n || gb.nrows() != n {
            return Err(mismatch("generator rows must equal the dimension"));
        }
        if ac.nrows() != b.len() || ab.nrows() != b.len() {
            return Err(mismatch("constraint rows must equal the right-hand side length"));
        }
        if ac.ncols() != gc.ncols() || ab.ncols() != gb.ncols() {
            return Err(mismatch("constraint columns must match generator columns"));
        }
        Ok(HybridZonotope { gc, gb, c, ac, ab, b })
    }

    /// The axis-aligned box `[lo, hi]`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self, BackendError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(BackendError::Invalid("box needs matching, non-empty bounds".into()));
        }
        if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
            return Err(BackendError::Invalid("box needs lower <= upper".into()));
        }
        let n = lo.len();
        let half = DVector::from_iterator(n, lo.iter().zip(hi).map(|(l, h)| 0.5 * (h - l)));
        let c = DVector::from_iterator(n, lo.iter().zip(hi).map(|(l, h)| 0.5 * (h + l)));
        Ok(HybridZonotope {
            gc: DMatrix::from_diagonal(&half),
            gb: DMatrix::zeros(n, 0),
            c,
            ac: DMatrix::zeros(0, n),
            ab: DMatrix::zeros(0, 0),
            b: DVector::zeros(0),
        })
    }

    /// Canonical empty set: no generators and the constraint `0 = 1`.
    pub fn empty(n: usize) -> Self {
        HybridZonotope {
            gc: DMatrix::zeros(n, 0),
            gb: DMatrix::zeros(n, 0),
            c: DVector::zeros(n),
            ac: DMatrix::zeros(1, 0),
            ab: DMatrix::zeros(1, 0),
            b: DVector::from_element(1, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn n_g(&self) -> usize {
        self.gc.ncols()
    }

    pub fn n_b(&self) -> usize {
        self.gb.ncols()
    }

    pub fn n_c(&self) -> usize {
        self.b.len()
    }

    /// Detects emptiness visible without solving: a zero constraint row with non-zero right side.
    pub fn is_trivially_empty(&self) -> bool {
        (0..self.n_c()).any(|i| {
            let zero = self.ac.row(i).iter().chain(self.ab.row(i).iter()).all(|v| v.abs() < PRUNE_TOL);
            zero && self.b[i].abs() > PRUNE_TOL
        })
    }

    fn check_dim(&self, other: &HybridZonotope) -> Result<(), BackendError> {
        if self.dim() != other.dim() {
            return Err(mismatch("operands have different dimensions"));
        }
        Ok(())
    }

    /// `{R x : x in Z}`.
    pub fn linear_map(&self, r: &DMatrix<f64>) -> Result<Self, BackendError> {
        if r.ncols() != self.dim() {
            return Err(mismatch("map columns must equal the dimension"));
        }
        if self.is_trivially_empty() {
            return Ok(HybridZonotope::empty(r.nrows()));
        }
        Ok(HybridZonotope {
            gc: r * &self.gc,
            gb: r * &self.gb,
            c: r * &self.c,
            ac: self.ac.clone(),
            ab: self.ab.clone(),
            b: self.b.clone(),
        })
    }

    /// `{x + y : x in Z, y in W}`.
    pub fn minkowski(&self, w: &HybridZonotope) -> Result<Self, BackendError> {
        self.check_dim(w)?;
        if self.is_trivially_empty() || w.is_trivially_empty() {
            return Ok(HybridZonotope::empty(self.dim()));
        }
        Ok(HybridZonotope {
            gc: hcat(&[&self.gc, &w.gc]),
            gb: hcat(&[&self.gb, &w.gb]),
            c: &self.c + &w.c,
            ac: blkdiag(&self.ac, &w.ac),
            ab: blkdiag(&self.ab, &w.ab),
            b: vcat_vec(&[&self.b, &w.b]),
        })
    }

    /// `{x in Z : R x in W}`.
    pub fn gen_intersect(&self, w: &HybridZonotope, r: &DMatrix<f64>) -> Result<Self, BackendError> {
        if r.ncols() != self.dim() || r.nrows() != w.dim() {
            return Err(mismatch("intersection map has the wrong shape"));
        }
        if self.is_trivially_empty() || w.is_trivially_empty() {
            return Ok(HybridZonotope::empty(self.dim()));
        }
        let (gz, gw) = (self.n_g(), w.n_g());
        let (bz, bw) = (self.n_b(), w.n_b());
        let gc = hcat(&[&self.gc, &DMatrix::zeros(self.dim(), gw)]);
        let gb = hcat(&[&self.gb, &DMatrix::zeros(self.dim(), bw)]);
        let ac = vcat(&[
            &hcat(&[&self.ac, &DMatrix::zeros(self.n_c(), gw)]),
            &hcat(&[&DMatrix::zeros(w.n_c(), gz), &w.ac]),
            &hcat(&[&(r * &self.gc), &(-&w.gc)]),
        ]);
        let ab = vcat(&[
            &hcat(&[&self.ab, &DMatrix::zeros(self.n_c(), bw)]),
            &hcat(&[&DMatrix::zeros(w.n_c(), bz), &w.ab]),
            &hcat(&[&(r * &self.gb), &(-&w.gb)]),
        ]);
        let b = vcat_vec(&[&self.b, &w.b, &(&w.c - r * &self.c)]);
        Ok(HybridZonotope { gc, gb, c: self.c.clone(), ac, ab, b })
    }

    pub fn intersect(&self, w: &HybridZonotope) -> Result<Self, BackendError> {
        self.gen_intersect(w, &DMatrix::identity(self.dim(), self.dim()))
    }

    /// `Z x W`.
    pub fn cartesian(&self, w: &HybridZonotope) -> Result<Self, BackendError> {
        if self.is_trivially_empty() || w.is_trivially_empty() {
            return Ok(HybridZonotope::empty(self.dim() + w.dim()));
        }
        Ok(HybridZonotope {
            gc: blkdiag(&self.gc, &w.gc),
            gb: blkdiag(&self.gb, &w.gb),
            c: vcat_vec(&[&self.c, &w.c]),
            ac: blkdiag(&self.ac, &w.ac),
            ab: blkdiag(&self.ab, &w.ab),
            b: vcat_vec(&[&self.b, &w.b]),
        })
    }

    /// `{x in Z : n·x <= f}` using one slack generator.
    pub fn intersect_halfspace(&self, n: &[f64], f: f64) -> Result<Self, BackendError> {
        if n.len() != self.dim() {
            return Err(mismatch("halfspace normal length"));
        }
        if self.is_trivially_empty() {
            return Ok(self.clone());
        }
        let nv = DVector::from_column_slice(n);
        let ngc = nv.transpose() * &self.gc;
        let ngb = nv.transpose() * &self.gb;
        let center = nv.dot(&self.c);
        let spread = ngc.iter().chain(ngb.iter()).map(|v| v.abs()).sum::<f64>();
        if center + spread <= f {
            return Ok(self.clone());
        }
        // slack s in [0, range] written as range/2 * (1 + xs)
        let range = f - (center - spread);
        if range < 0.0 {
            return Ok(HybridZonotope::empty(self.dim()));
        }
        let half = 0.5 * range;
        let gc = hcat(&[&self.gc, &DMatrix::zeros(self.dim(), 1)]);
        let mut row = DMatrix::zeros(1, self.n_g() + 1);
        row.view_mut((0, 0), (1, self.n_g())).copy_from(&ngc);
        row[(0, self.n_g())] = half;
        let ac = vcat(&[&hcat(&[&self.ac, &DMatrix::zeros(self.n_c(), 1)]), &row]);
        let ab = vcat(&[&self.ab, &DMatrix::from_row_slice(1, self.n_b(), ngb.as_slice())]);
        let b = vcat_vec(&[&self.b, &DVector::from_element(1, f - center - half)]);
        Ok(HybridZonotope { gc, gb: self.gb.clone(), c: self.c.clone(), ac, ab, b })
    }

    /// Exact union; adds one binary that selects the active operand.
    pub fn union(&self, w: &HybridZonotope) -> Result<Self, BackendError> {
        self.check_dim(w)?;
        if self.is_trivially_empty() {
            return Ok(w.clone());
        }
        if w.is_trivially_empty() {
            return Ok(self.clone());
        }
        let n = self.dim();
        let (g1, g2, b1, b2) = (self.n_g(), w.n_g(), self.n_b(), w.n_b());
        let (c1, c2) = (self.n_c(), w.n_c());
        let ones = |k: usize| DVector::from_element(k, 1.0);
        let m1 = &self.gc * ones(g1) + &self.gb * ones(b1);
        let m2 = &w.gc * ones(g2) + &w.gb * ones(b2);
        let k1 = &self.c - &m1;
        let k2 = &w.c - &m2;
        let center = &m1 + &m2 + (&k1 + &k2) * 0.5;
        let selector = (&k2 - &k1) * 0.5;
        let q1 = &self.ac * ones(g1) + &self.ab * ones(b1);
        let q2 = &w.ac * ones(g2) + &w.ab * ones(b2);
        let r1 = &q1 + &self.b;
        let r2 = &q2 + &w.b;

        // columns: continuous [x1 | x2 | slacks], binary [beta1 | beta2 | lambda]
        let slacks = g1 + b1 + g2 + b2;
        let ng = g1 + g2 + slacks;
        let nb = b1 + b2 + 1;
        let nc = c1 + c2 + slacks;
        let mut gc = DMatrix::zeros(n, ng);
        gc.view_mut((0, 0), (n, g1)).copy_from(&self.gc);
        gc.view_mut((0, g1), (n, g2)).copy_from(&w.gc);
        let mut gb = DMatrix::zeros(n, nb);
        gb.view_mut((0, 0), (n, b1)).copy_from(&self.gb);
        gb.view_mut((0, b1), (n, b2)).copy_from(&w.gb);
        gb.set_column(nb - 1, &selector);

        let mut ac = DMatrix::zeros(nc, ng);
        let mut ab = DMatrix::zeros(nc, nb);
        let mut b = DVector::zeros(nc);
        // operand constraints, active only on their branch (lambda = -1 selects the first)
        ac.view_mut((0, 0), (c1, g1)).copy_from(&self.ac);
        ab.view_mut((0, 0), (c1, b1)).copy_from(&self.ab);
        ab.view_mut((0, nb - 1), (c1, 1)).copy_from(&(&r1 * 0.5));
        b.rows_mut(0, c1).copy_from(&(&r1 * 0.5 - &q1));
        ac.view_mut((c1, g1), (c2, g2)).copy_from(&w.ac);
        ab.view_mut((c1, b1), (c2, b2)).copy_from(&w.ab);
        ab.view_mut((c1, nb - 1), (c2, 1)).copy_from(&(&r2 * -0.5));
        b.rows_mut(c1, c2).copy_from(&(&r2 * 0.5 - &q2));
        // each variable of an inactive branch is pinned to -1 through a slack
        let mut row = c1 + c2;
        let mut slack = g1 + g2;
        let mut pin = |ac: &mut DMatrix<f64>, ab: &mut DMatrix<f64>, var: (bool, usize), sign: f64| {
            match var {
                (false, col) => ac[(row, col)] = 1.0,
                (true, col) => ab[(row, col)] = 1.0,
            }
            ac[(row, slack)] = 1.0;
            ab[(row, nb - 1)] = sign;
            b[row] = -1.0;
            row += 1;
            slack += 1;
        };
        for j in 0..g1 {
            pin(&mut ac, &mut ab, (false, j), 1.0);
        }
        for j in 0..b1 {
            pin(&mut ac, &mut ab, (true, j), 1.0);
        }
        for j in 0..g2 {
            pin(&mut ac, &mut ab, (false, g1 + j), -1.0);
        }
        for j in 0..b2 {
            pin(&mut ac, &mut ab, (true, b1 + j), -1.0);
        }
        Ok(HybridZonotope { gc, gb, c: center, ac, ab, b })
    }

    /// Drops all-zero generator columns and all-zero constraint rows.
    ///
    /// A zero row with a non-zero right side makes the result the canonical empty set.
    pub fn prune(&self) -> Self {
        if self.is_trivially_empty() {
            return HybridZonotope::empty(self.dim());
        }
        let keep_rows: Vec<usize> = (0..self.n_c())
            .filter(|&i| {
                self.ac.row(i).iter().chain(self.ab.row(i).iter()).any(|v| v.abs() >= PRUNE_TOL)
            })
            .collect();
        let col_used = |g: &DMatrix<f64>, a: &DMatrix<f64>, j: usize| {
            g.column(j).iter().any(|v| v.abs() >= PRUNE_TOL)
                || keep_rows.iter().any(|&i| a[(i, j)].abs() >= PRUNE_TOL)
        };
        let keep_c: Vec<usize> = (0..self.n_g()).filter(|&j| col_used(&self.gc, &self.ac, j)).collect();
        let keep_b: Vec<usize> = (0..self.n_b()).filter(|&j| col_used(&self.gb, &self.ab, j)).collect();
        if keep_rows.len() == self.n_c() && keep_c.len() == self.n_g() && keep_b.len() == self.n_b() {
            return self.clone();
        }
        HybridZonotope {
            gc: self.gc.select_columns(&keep_c),
            gb: self.gb.select_columns(&keep_b),
            c: self.c.clone(),
            ac: self.ac.select_rows(&keep_rows).select_columns(&keep_c),
            ab: self.ab.select_rows(&keep_rows).select_columns(&keep_b),
            b: self.b.select_rows(&keep_rows),
        }
    }

    pub fn is_empty(&self, cap: usize) -> Result<bool, BackendError> {
        if self.is_trivially_empty() {
            return Ok(true);
        }
        Ok(!lp::mixed_feasible(&self.ac, &self.ab, &self.b, cap)?)
    }

    pub fn contains(&self, x: &[f64], cap: usize) -> Result<bool, BackendError> {
        if x.len() != self.dim() {
            return Err(mismatch("point dimension"));
        }
        if self.is_trivially_empty() {
            return Ok(false);
        }
        let mc = vcat(&[&self.ac, &self.gc]);
        let mb = vcat(&[&self.ab, &self.gb]);
        let d = vcat_vec(&[&self.b, &(DVector::from_column_slice(x) - &self.c)]);
        lp::mixed_feasible(&mc, &mb, &d, cap)
    }
}
