//! Exact arithmetic over the Gaussian rationals for small Vandermonde systems.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result, C64};

pub type QComplex = Complex<BigRational>;

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_int(v: i64) -> QComplex {
    Complex::new(rational(v, 1), BigRational::zero())
}

/// Exact rational value of a finite double.
pub fn q_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::invalid(format!("{v} is not finite")))
}

pub fn q_from_c64(z: C64) -> Result<QComplex> {
    Ok(Complex::new(q_from_f64(z.re)?, q_from_f64(z.im)?))
}

pub fn q_to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn q_to_c64(z: &QComplex) -> C64 {
    C64::new(q_to_f64(&z.re), q_to_f64(&z.im))
}

/// Solves `A c = b` exactly by Gaussian elimination.
pub fn solve(mut a: Vec<Vec<QComplex>>, mut b: Vec<QComplex>) -> Result<Vec<QComplex>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: a.len() });
    }
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Singular(format!("exact elimination: zero column {col}")))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = QComplex::one() / a[col][col].clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() * inv.clone();
            for k in col..n {
                let t = factor.clone() * a[col][k].clone();
                a[r][k] = a[r][k].clone() - t;
            }
            let t = factor * b[col].clone();
            b[r] = b[r].clone() - t;
        }
    }
    let mut x = vec![QComplex::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - a[row][k].clone() * x[k].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Ok(x)
}

/// Exact solution of `Σ_k c_k y_k^j = x^j`, `j = 0, …, K − 1`.
pub fn solve_moments(nodes: &[QComplex], x: &QComplex) -> Result<Vec<QComplex>> {
    let k = nodes.len();
    let mut rows = Vec::with_capacity(k);
    let mut rhs = Vec::with_capacity(k);
    let mut powers: Vec<QComplex> = vec![QComplex::one(); k];
    let mut xp = QComplex::one();
    for _ in 0..k {
        rows.push(powers.clone());
        rhs.push(xp.clone());
        for (p, y) in powers.iter_mut().zip(nodes) {
            *p = p.clone() * y.clone();
        }
        xp = xp * x.clone();
    }
    solve(rows, rhs)
}

/// Affine weights `a_j = ∏_{k≠j} m_j / (m_j − m_k)`: the Lagrange basis at the
/// nodes `1/m_j` evaluated at zero. Entries of `m` must be distinct and positive.
pub fn elimination_weights_for(m: &[u64]) -> Result<Vec<BigRational>> {
    if m.is_empty() {
        return Err(Error::invalid("empty m list"));
    }
    if m.contains(&0) {
        return Err(Error::invalid("m values must be positive"));
    }
    let mut out = Vec::with_capacity(m.len());
    for (j, &mj) in m.iter().enumerate() {
        let mut a = BigRational::one();
        for (k, &mk) in m.iter().enumerate() {
            if k == j {
                continue;
            }
            if mk == mj {
                return Err(Error::invalid(format!("repeated m value {mj}")));
            }
            a *= BigRational::new(BigInt::from(mj), BigInt::from(mj as i128 - mk as i128));
        }
        out.push(a);
    }
    Ok(out)
}

/// Weights for the default sequence `m_j = d + j`, `j = 0, …, d − 1`.
pub fn elimination_weights(d: u32) -> Result<Vec<BigRational>> {
    if d == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    let m: Vec<u64> = (0..d as u64).map(|j| d as u64 + j).collect();
    elimination_weights_for(&m)
}

/// The closed factorial expression `(d+j)! / (j! (d−1−j)!)`, kept only so
/// tests can show where it departs from the product formula.
pub fn factorial_expression(d: u32, j: u32) -> BigInt {
    let fact = |n: u32| -> BigInt { (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i)) };
    fact(d + j) / (fact(j) * fact(d - 1 - j))
}

/// Sum of `|a_j|` in exact arithmetic.
pub fn abs_sum(a: &[BigRational]) -> BigRational {
    a.iter().map(|v| v.abs()).fold(BigRational::zero(), |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_for_small_degrees() {
        assert_eq!(elimination_weights(1).unwrap(), vec![rational(1, 1)]);
        assert_eq!(elimination_weights(2).unwrap(), vec![rational(-2, 1), rational(3, 1)]);
        assert_eq!(
            elimination_weights(3).unwrap(),
            vec![rational(9, 2), rational(-16, 1), rational(25, 2)]
        );
    }

    #[test]
    fn weights_match_an_exact_linear_solve() {
        for d in 1..=6u32 {
            let m: Vec<i64> = (0..d as i64).map(|j| d as i64 + j).collect();
            let rows: Vec<Vec<QComplex>> = (0..d)
                .map(|k| {
                    m.iter()
                        .map(|&mj| {
                            let r = rational(1, mj.pow(k));
                            Complex::new(r, BigRational::zero())
                        })
                        .collect()
                })
                .collect();
            let mut rhs = vec![QComplex::zero(); d as usize];
            rhs[0] = QComplex::one();
            let solved = solve(rows, rhs).unwrap();
            let weights = elimination_weights(d).unwrap();
            for (s, w) in solved.iter().zip(&weights) {
                assert!(s.im.is_zero());
                assert_eq!(&s.re, w);
            }
        }
    }

    #[test]
    fn factorial_expression_departs_from_product() {
        let a = elimination_weights(2).unwrap();
        assert_eq!(a[1], rational(3, 1));
        assert_eq!(factorial_expression(2, 1), BigInt::from(6));
    }

    #[test]
    fn exact_two_node_solve() {
        let nodes = [
            Complex::new(rational(9, 10), BigRational::zero()),
            Complex::new(rational(-9, 10), BigRational::zero()),
        ];
        let x = Complex::new(rational(3, 10), BigRational::zero());
        let c = solve_moments(&nodes, &x).unwrap();
        assert_eq!(c[0].re, rational(2, 3));
        assert_eq!(c[1].re, rational(1, 3));
    }

    #[test]
    fn singular_exact_system() {
        let nodes = [q_int(1), q_int(1)];
        assert!(matches!(solve_moments(&nodes, &q_int(0)), Err(Error::Singular(_))));
    }

    #[test]
    fn f64_conversion_is_exact() {
        let q = q_from_f64(0.1).unwrap();
        assert_eq!(q_to_f64(&q), 0.1);
        assert!(q_from_f64(f64::NAN).is_err());
    }
}
