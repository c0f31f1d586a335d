//! Small dense linear algebra helpers on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::scalar::{Exact, Scalar};

/// Largest system (rows × columns) solved in exact arithmetic.
const EXACT_LIMIT: usize = 4096;

/// Numerical rank of the matrix with the given rows, relative to the
/// largest singular value.
pub fn rank(rows: &[Vec<f64>], ncols: usize, tol: f64) -> usize {
    if rows.is_empty() || ncols == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    matrix_rank(&m, tol)
}

pub fn matrix_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > tol * max.max(1.0)).count()
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves the square system `m x = b`; `None` when `m` is singular.
pub fn solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().lu().solve(b)
}

/// Normal equations `mᵀm x = mᵀb` solved over the rationals and rounded
/// once, so a consistent system with a representable solution is solved
/// exactly. `None` without full column rank or on non-finite input.
pub fn least_squares_exact(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    let k = b.ncols();
    if rows < cols || b.nrows() != rows || m.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return None;
    }
    let me: Vec<Exact> = m.iter().map(|&x| Exact::from_f64(x)).collect();
    let be: Vec<Exact> = b.iter().map(|&x| Exact::from_f64(x)).collect();
    // Column-major storage.
    let at = |i: usize, j: usize| &me[j * rows + i];
    let bt = |i: usize, j: usize| &be[j * rows + i];
    let mut aug: Vec<Vec<Exact>> = (0..cols)
        .map(|r| {
            let mut row = Vec::with_capacity(cols + k);
            for c in 0..cols {
                row.push((0..rows).fold(Exact::zero(), |acc, i| acc + at(i, r).clone() * at(i, c).clone()));
            }
            for c in 0..k {
                row.push((0..rows).fold(Exact::zero(), |acc, i| acc + at(i, r).clone() * bt(i, c).clone()));
            }
            row
        })
        .collect();
    for c in 0..cols {
        let pivot = (c..cols).find(|&r| !Scalar::is_zero(&aug[r][c]))?;
        aug.swap(c, pivot);
        let p = aug[c][c].clone();
        for v in aug[c].iter_mut() {
            *v = v.clone() / p.clone();
        }
        for r in 0..cols {
            if r != c && !Scalar::is_zero(&aug[r][c]) {
                let f = aug[r][c].clone();
                for j in c..cols + k {
                    let d = f.clone() * aug[c][j].clone();
                    aug[r][j] = aug[r][j].clone() - d;
                }
            }
        }
    }
    Some(DMatrix::from_fn(cols, k, |i, j| Scalar::to_f64(&aug[i][cols + j])))
}

/// Least squares solution of `m x ≈ b`: exact normal equations for small
/// full-rank systems, otherwise the minimum-norm SVD solution with two
/// steps of iterative refinement.
pub fn least_squares(m: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() * (m.ncols() + b.ncols()) <= EXACT_LIMIT {
        if let Some(x) = least_squares_exact(m, b) {
            return x;
        }
    }
    let svd = m.clone().svd(true, true);
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = 1e-13 * max.max(f64::MIN_POSITIVE);
    let Ok(mut x) = svd.solve(b, eps) else {
        return DMatrix::zeros(m.ncols(), b.ncols());
    };
    let mut best = (b - m * &x).norm();
    for _ in 0..2 {
        if best == 0.0 {
            break;
        }
        let Ok(dx) = svd.solve(&(b - m * &x), eps) else { break };
        let candidate = &x + dx;
        let r = (b - m * &candidate).norm();
        if r >= best {
            break;
        }
        x = candidate;
        best = r;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rank_of_simple_matrices() {
        assert_eq!(rank(&[vec![1.0, 0.0], vec![2.0, 0.0]], 2, 1e-12), 1);
        assert_eq!(rank(&[vec![1.0, 0.0], vec![0.0, 3.0]], 2, 1e-12), 2);
        assert_eq!(rank(&[vec![0.0, 0.0]], 2, 1e-12), 0);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DMatrix::from_row_slice(3, 1, &[2.0, 3.0, 5.0]);
        let x = least_squares(&m, &b);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
        assert!(condition_number(&DMatrix::<f64>::zeros(2, 2)).is_infinite());
    }

    #[test]
    fn exact_least_squares() {
        // Directions e1, e2, e1+e2, e1-e2 and a dyadic 2x2 block.
        let v = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0]);
        let a = DMatrix::from_row_slice(2, 2, &[0.375, -1.25, 0.125, 2.0]);
        let y = &v * a.transpose();
        assert_eq!(least_squares_exact(&v, &y).unwrap(), a.transpose());
        // Inconsistent data: the normal-equation solution of x ≈ (0, 1, 1).
        let m = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let b = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 1.0]);
        assert_eq!(least_squares_exact(&m, &b).unwrap()[0], 2.0 / 3.0);
        assert!(least_squares_exact(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), &b.rows(0, 2).into()).is_none());
        let rank_deficient = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let x = least_squares(&rank_deficient, &DMatrix::from_row_slice(2, 1, &[2.0, 2.0]));
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
