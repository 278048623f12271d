//! Small dense linear algebra used by the exact analyses.
//!
//! Every system solved in this crate has at most a few dozen unknowns, so the
//! helpers here trade generality for residual checks on every solve.

use nalgebra::{DMatrix, DVector};

use crate::{LabError, Result};

/// Residual bound accepted from [`solve_checked`].
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `a x = b` by LU with partial pivoting and verify `|a x - b|_inf`.
///
/// `a` is row-major, `a[i][j]`.
pub fn solve_checked(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(LabError::DimensionMismatch { expected: n, got: a.len() });
    }
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let rhs = DVector::from_column_slice(b);
    let x = m
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| LabError::Solve("matrix is singular".into()))?;
    let scale = 1.0 + rhs.amax() + m.amax() * x.amax();
    let residual = (&m * &x - &rhs).amax();
    if !residual.is_finite() || residual > SOLVE_RESIDUAL_TOL * scale {
        return Err(LabError::Solve(format!("residual {residual:e} too large")));
    }
    Ok(x.iter().copied().collect())
}

/// Weighted least squares: argmin_w sum_r weight[r] (rows[r] . w - target[r])^2.
///
/// Rows with zero weight are ignored. Fails when the weighted normal matrix is
/// rank deficient.
pub fn weighted_least_squares(rows: &[Vec<f64>], targets: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    let d = rows.first().map(Vec::len).unwrap_or(0);
    if d == 0 {
        return Err(LabError::RankDeficient("no features".into()));
    }
    let mut normal = vec![vec![0.0; d]; d];
    let mut rhs = vec![0.0; d];
    for ((row, &y), &c) in rows.iter().zip(targets).zip(weights) {
        if row.len() != d {
            return Err(LabError::DimensionMismatch { expected: d, got: row.len() });
        }
        if c == 0.0 {
            continue;
        }
        for k in 0..d {
            rhs[k] += c * row[k] * y;
            for l in 0..d {
                normal[k][l] += c * row[k] * row[l];
            }
        }
    }
    if matrix_rank(&normal, 1e-12) < d {
        return Err(LabError::RankDeficient(format!(
            "weighted normal matrix has rank below {d}"
        )));
    }
    solve_checked(&normal, &rhs)
}

/// Rank by Gaussian elimination with full pivoting.
///
/// A pivot counts when its magnitude exceeds `tol` times the largest entry of
/// the matrix (or `tol` itself for matrices with entries below one).
pub fn matrix_rank(a: &[Vec<f64>], tol: f64) -> usize {
    let rows = a.len();
    let cols = a.first().map(Vec::len).unwrap_or(0);
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let threshold = tol * scale;
    let mut rank = 0;
    let mut col_used = vec![false; cols];
    let mut row_used = vec![false; rows];
    loop {
        let mut best = (0.0, 0, 0);
        for (i, row) in m.iter().enumerate() {
            if row_used[i] {
                continue;
            }
            for (j, &v) in row.iter().enumerate() {
                if !col_used[j] && v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        let (mag, pi, pj) = best;
        if mag <= threshold {
            break;
        }
        row_used[pi] = true;
        col_used[pj] = true;
        rank += 1;
        let pivot_row = m[pi].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if row_used[i] {
                continue;
            }
            let f = row[pj] / pivot_row[pj];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
    }
    rank
}
