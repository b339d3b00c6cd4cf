//! Feasibility of `{xi in [-1, 1]^n : M xi = d}` by a phase-1 simplex.
//!
//! Variables are shifted to `y = xi + 1 in [0, 2]` and handled by a dense
//! bounded-variable tableau. One artificial per (equilibrated, sign-normalized)
//! row starts in the basis; artificial columns are not stored, so an artificial
//! that leaves the basis never re-enters. Bland's rule picks both the entering
//! and the leaving variable, which rules out cycling.

use nalgebra::{DMatrix, DVector};

use crate::backend::BackendError;

/// Problems with a residual artificial sum at or below this are feasible.
pub const FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;
const ZERO_ROW: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Var {
    Structural(usize),
    Artificial(usize),
}

/// Returns a point `xi` with `M xi = d` and `|xi_i| <= 1`, or `None` if there is none.
pub fn feasible_point(m: &DMatrix<f64>, d: &DVector<f64>) -> Result<Option<Vec<f64>>, BackendError> {
    let (rows, n) = m.shape();
    assert_eq!(rows, d.len(), "constraint rows and right-hand side differ");
    // tableau rows: equilibrated, shifted, sign-normalized
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(rows);
    let mut beta: Vec<f64> = Vec::with_capacity(rows);
    for i in 0..rows {
        let row: Vec<f64> = (0..n).map(|j| m[(i, j)]).collect();
        let scale = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut r = d[i] + row.iter().sum::<f64>();
        if scale < ZERO_ROW {
            if (d[i]).abs() > FEAS_TOL {
                return Ok(None);
            }
            continue;
        }
        let mut row: Vec<f64> = row.iter().map(|v| v / scale).collect();
        r /= scale;
        if r < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            r = -r;
        }
        t.push(row);
        beta.push(r);
    }
    let m_rows = t.len();
    if m_rows == 0 {
        return Ok(Some(vec![0.0; n]));
    }
    let mut basis: Vec<Var> = (0..m_rows).map(Var::Artificial).collect();
    let mut at_upper = vec![false; n];
    let mut is_basic = vec![false; n];
    // reduced costs of structural columns for the objective sum(artificials)
    let mut cost: Vec<f64> = (0..n).map(|j| -t.iter().map(|row| row[j]).sum::<f64>()).collect();

    let order = |v: Var| match v {
        Var::Structural(j) => j,
        Var::Artificial(i) => n + i,
    };
    let max_iter = 50 * (m_rows + n) + 1000;
    for _ in 0..max_iter {
        let entering = (0..n).find(|&j| {
            !is_basic[j] && ((!at_upper[j] && cost[j] < -COST_TOL) || (at_upper[j] && cost[j] > COST_TOL))
        });
        let Some(j) = entering else {
            let residual: f64 = basis
                .iter()
                .zip(&beta)
                .filter(|(v, _)| matches!(v, Var::Artificial(_)))
                .map(|(_, b)| b.max(0.0))
                .sum();
            if residual > FEAS_TOL {
                return Ok(None);
            }
            let mut y: Vec<f64> = (0..n).map(|k| if at_upper[k] { 2.0 } else { 0.0 }).collect();
            for (v, b) in basis.iter().zip(&beta) {
                if let Var::Structural(k) = v {
                    y[*k] = b.clamp(0.0, 2.0);
                }
            }
            return Ok(Some(y.into_iter().map(|v| v - 1.0).collect()));
        };
        let dir = if at_upper[j] { -1.0 } else { 1.0 };
        // ratio test; the entering variable's own bound flip is the first candidate
        let mut theta = 2.0;
        let mut leave: Option<(usize, bool)> = None;
        for i in 0..m_rows {
            let a = dir * t[i][j];
            let (limit, to_upper) = if a > PIVOT_TOL {
                (beta[i].max(0.0) / a, false)
            } else if a < -PIVOT_TOL {
                match basis[i] {
                    Var::Structural(_) => ((2.0 - beta[i]).max(0.0) / -a, true),
                    Var::Artificial(_) => continue,
                }
            } else {
                continue;
            };
            let better = match leave {
                _ if limit < theta - 1e-12 => true,
                Some((r, _)) if limit <= theta + 1e-12 => order(basis[i]) < order(basis[r]),
                None if limit <= theta + 1e-12 => true,
                _ => false,
            };
            if better {
                theta = limit.min(theta);
                leave = Some((i, to_upper));
            }
        }
        match leave {
            None => {
                // bound flip
                for i in 0..m_rows {
                    beta[i] -= dir * 2.0 * t[i][j];
                }
                at_upper[j] = !at_upper[j];
            }
            Some((r, to_upper)) => {
                let start = if at_upper[j] { 2.0 } else { 0.0 };
                for i in 0..m_rows {
                    beta[i] -= dir * theta * t[i][j];
                }
                beta[r] = start + dir * theta;
                if let Var::Structural(k) = basis[r] {
                    is_basic[k] = false;
                    at_upper[k] = to_upper;
                }
                basis[r] = Var::Structural(j);
                is_basic[j] = true;
                at_upper[j] = false;
                let p = t[r][j];
                t[r].iter_mut().for_each(|v| *v /= p);
                let pivot_row = t[r].clone();
                for (i, row) in t.iter_mut().enumerate() {
                    if i == r {
                        continue;
                    }
                    let f = row[j];
                    if f != 0.0 {
                        row.iter_mut().zip(&pivot_row).for_each(|(v, pr)| *v -= f * pr);
                        row[j] = 0.0;
                    }
                }
                let f = cost[j];
                cost.iter_mut().zip(&pivot_row).for_each(|(v, pr)| *v -= f * pr);
                cost[j] = 0.0;
            }
        }
    }
    Err(BackendError::LpIterationLimit(max_iter))
}

/// Feasibility with binary columns: `Mc xc + Mb xb = d`, `xc in [-1, 1]`, `xb in {-1, 1}`.
///
/// Branch and bound over the binaries, pruning on infeasible relaxations.
pub fn mixed_feasible(
    mc: &DMatrix<f64>,
    mb: &DMatrix<f64>,
    d: &DVector<f64>,
    cap: usize,
) -> Result<bool, BackendError> {
    if mb.ncols() > cap {
        return Err(BackendError::BinaryCapExceeded { n_b: mb.ncols(), cap });
    }
    let mut fixed = vec![None; mb.ncols()];
    branch(mc, mb, d, &mut fixed)
}

fn branch(
    mc: &DMatrix<f64>,
    mb: &DMatrix<f64>,
    d: &DVector<f64>,
    fixed: &mut Vec<Option<f64>>,
) -> Result<bool, BackendError> {
    let free: Vec<usize> = (0..fixed.len()).filter(|&k| fixed[k].is_none()).collect();
    let nc = mc.ncols();
    let mut m = DMatrix::zeros(d.len(), nc + free.len());
    m.columns_mut(0, nc).copy_from(mc);
    for (slot, &k) in free.iter().enumerate() {
        m.column_mut(nc + slot).copy_from(&mb.column(k));
    }
    let mut rhs = d.clone();
    for (k, v) in fixed.iter().enumerate() {
        if let Some(v) = v {
            rhs -= mb.column(k) * *v;
        }
    }
    let Some(x) = feasible_point(&m, &rhs)? else {
        return Ok(false);
    };
    let fractional = free
        .iter()
        .enumerate()
        .find(|(slot, _)| (x[nc + slot].abs() - 1.0).abs() > 1e-9);
    let Some((slot, &k)) = fractional else {
        return Ok(true);
    };
    let first = if x[nc + slot] >= 0.0 { 1.0 } else { -1.0 };
    for v in [first, -first] {
        fixed[k] = Some(v);
        if branch(mc, mb, d, fixed)? {
            fixed[k] = None;
            return Ok(true);
        }
    }
    fixed[k] = None;
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(m: &DMatrix<f64>, d: &DVector<f64>, x: &[f64]) {
        assert!(x.iter().all(|v| v.abs() <= 1.0 + 1e-9));
        let r = m * DVector::from_column_slice(x) - d;
        assert!(r.amax() < 1e-7, "residual {}", r.amax());
    }

    #[test]
    fn single_generator_constraint() {
        let m = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(feasible_point(&m, &DVector::from_vec(vec![2.0])).unwrap().is_none());
        let x = feasible_point(&m, &DVector::from_vec(vec![0.5])).unwrap().unwrap();
        check(&m, &DVector::from_vec(vec![0.5]), &x);
    }

    #[test]
    fn needs_upper_bounds() {
        // x1 + x2 + x3 = 2.5 requires two variables near their upper bound
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 1.0, -1.0, 0.0]);
        let d = DVector::from_vec(vec![2.5, 0.0]);
        let x = feasible_point(&m, &d).unwrap().unwrap();
        check(&m, &d, &x);
        let d = DVector::from_vec(vec![3.5, 0.0]);
        assert!(feasible_point(&m, &d).unwrap().is_none());
    }

    #[test]
    fn zero_rows() {
        let m = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(feasible_point(&m, &DVector::from_vec(vec![1.0, 0.0])).unwrap().is_none());
        assert!(feasible_point(&m, &DVector::from_vec(vec![0.0, 0.0])).unwrap().is_some());
        let empty = DMatrix::<f64>::zeros(0, 3);
        assert_eq!(feasible_point(&empty, &DVector::zeros(0)).unwrap(), Some(vec![0.0; 3]));
    }

    #[test]
    fn agrees_with_grid_search_on_random_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (rows, n) = (rng.gen_range(1..3), 2);
            let m = DMatrix::from_fn(rows, n, |_, _| rng.gen_range(-2.0..2.0));
            let d = DVector::from_fn(rows, |_, _| rng.gen_range(-3.0..3.0));
            let got = feasible_point(&m, &d).unwrap();
            if let Some(x) = &got {
                check(&m, &d, x);
            } else if rows == 1 {
                // one row: feasible iff d lies between the row's min and max over the box
                let s: f64 = (0..n).map(|j| m[(0, j)].abs()).sum();
                assert!(d[0].abs() > s - 1e-9, "missed feasible point");
            }
        }
    }

    #[test]
    fn binaries_are_enforced() {
        // xb = 0 is only reachable by the relaxation
        let mc = DMatrix::<f64>::zeros(1, 0);
        let mb = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(!mixed_feasible(&mc, &mb, &DVector::from_vec(vec![0.0]), 20).unwrap());
        assert!(mixed_feasible(&mc, &mb, &DVector::from_vec(vec![-1.0]), 20).unwrap());
        let mb = DMatrix::<f64>::zeros(1, 21);
        assert!(matches!(
            mixed_feasible(&mc, &mb, &DVector::from_vec(vec![0.0]), 20),
            Err(BackendError::BinaryCapExceeded { n_b: 21, cap: 20 })
        ));
    }
}
