//! Dense complex linear algebra for the small systems that appear here
//! (at most a few dozen unknowns).

use crate::{Error, Result, C64};

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(matrix: &[Vec<C64>]) -> Result<C64> {
    let n = matrix.len();
    for row in matrix {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: row.len() });
        }
    }
    let mut a: Vec<Vec<C64>> = matrix.to_vec();
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        if a[pivot][col].norm() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for row in col + 1..n {
            let factor = a[row][col] / p;
            if factor.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= factor * v;
            }
        }
    }
    Ok(det)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(matrix: &[Vec<C64>], rhs: &[C64]) -> Result<Vec<C64>> {
    let n = matrix.len();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
    }
    let mut a: Vec<Vec<C64>> = matrix.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        if a[pivot][col].norm() == 0.0 {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        a.swap(pivot, col);
        b.swap(pivot, col);
        let p = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / p;
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= factor * v;
            }
            let v = b[col];
            b[row] -= factor * v;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Solves a real least-squares problem `min ‖A x − b‖` for complex `b` via
/// the normal equations. Used only for tiny fits (a handful of unknowns).
pub fn least_squares(design: &[Vec<f64>], rhs: &[C64]) -> Result<Vec<C64>> {
    let rows = design.len();
    if rows != rhs.len() {
        return Err(Error::DimensionMismatch { expected: rows, found: rhs.len() });
    }
    let cols = design.first().map_or(0, Vec::len);
    if cols == 0 {
        return Ok(Vec::new());
    }
    let mut normal = vec![vec![C64::new(0.0, 0.0); cols]; cols];
    let mut proj = vec![C64::new(0.0, 0.0); cols];
    for (row, &b) in design.iter().zip(rhs) {
        for i in 0..cols {
            for j in 0..cols {
                normal[i][j] += row[i] * row[j];
            }
            proj[i] += row[i] * b;
        }
    }
    solve(&normal, &proj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn det_of_two_by_two() {
        let m = vec![vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(4.0, 0.0)]];
        assert!((det(&m).unwrap() - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_det_is_zero_and_solve_fails() {
        let m = vec![vec![c(1.0, 1.0), c(2.0, 2.0)], vec![c(1.0, 1.0), c(2.0, 2.0)]];
        assert!(det(&m).unwrap().norm() < 1e-14);
        assert!(solve(&m, &[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn solve_recovers_known_vector() {
        let m = vec![
            vec![c(2.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(3.0, 0.0), c(0.0, -1.0)],
            vec![c(0.5, 0.0), c(1.0, 1.0), c(4.0, 0.0)],
        ];
        let x = vec![c(1.0, -1.0), c(0.5, 0.0), c(0.0, 2.0)];
        let b: Vec<C64> = m.iter().map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let got = solve(&m, &b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-12);
        }
    }
}
