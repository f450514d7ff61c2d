//! Exact Gaussian elimination over the rationals.

use num::{One, Signed, Zero};

use crate::rational::Q;

pub fn determinant(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    if n == 0 {
        return Q::one();
    }
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut det = Q::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Q::zero();
        };
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &p;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    det
}

/// Solves `A x = b` exactly. Returns one solution (free variables set to
/// zero) or `None` when the system is inconsistent.
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let Some(piv) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(piv, row);
        let p = m[row][col].clone();
        for c in col..=cols {
            m[row][c] = &m[row][c] / &p;
        }
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if m[row..].iter().any(|r| !r[cols].is_zero()) {
        return None;
    }
    let mut x = vec![Q::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][cols].clone();
    }
    Some(x)
}

/// Rank of a rational matrix.
pub fn rank(a: &[Vec<Q>]) -> usize {
    let mut m = a.to_vec();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut row = 0;
    for col in 0..cols {
        let Some(piv) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(piv, row);
        for r in row + 1..rows {
            if !m[r][col].is_zero() {
                let factor = &m[r][col] / &m[row][col];
                for c in col..cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        row += 1;
        if row == rows {
            break;
        }
    }
    row
}

pub fn max_abs(xs: &[Q]) -> Q {
    xs.iter().map(|x| x.abs()).max().unwrap_or_else(Q::zero)
}
