//! Sparse multivariate analytic polynomials with complex coefficients.
//!
//! A [`Polynomial`] carries its declared bounds: dimension `n`, total degree
//! `d`, and grid size `K` (individual degree at most `K − 1`). Every stored
//! monomial respects both bounds, and no stored coefficient is exactly zero.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cplx::{powi, root_of_unity};
use crate::{par, Error, Result, C64};

/// Exponent vector `α = (α_1, …, α_n)`.
///
/// Ordered graded-lexicographically: first by total degree, then so that
/// earlier variables carry more weight (`z_1` sorts before `z_2`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn zero(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max_exponent(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Indices with a nonzero exponent.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(j, _)| j)
            .collect()
    }

    /// `z^α` with `0^0 = 1`.
    pub fn eval(&self, z: &[C64]) -> C64 {
        self.0
            .iter()
            .zip(z)
            .filter(|(&a, _)| a > 0)
            .map(|(&a, &zj)| powi(zj, a))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponent vectors of length `n` with `|α| ≤ d` and every `α_j ≤ K − 1`,
/// sorted graded-lex.
pub fn admissible_monomials(n: usize, d: u32, k: u32) -> Vec<Monomial> {
    let cap = k.saturating_sub(1).min(d);
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(pos: usize, left: u32, cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if pos == cur.len() {
            out.push(Monomial(cur.clone()));
            return;
        }
        for e in 0..=cap.min(left) {
            cur[pos] = e;
            rec(pos + 1, left - e, cap, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, d, cap, &mut cur, &mut out);
    out.sort();
    out
}

/// Sparse polynomial `f(z) = Σ_α f̂(α) z^α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct Polynomial {
    n: usize,
    d: u32,
    k: u32,
    terms: BTreeMap<Monomial, C64>,
}

impl Polynomial {
    /// Zero polynomial in `n` variables with total degree bound `d` and
    /// individual degree bound `k − 1`.
    pub fn new(n: usize, d: u32, k: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("polynomial dimension must be positive"));
        }
        if k == 0 {
            return Err(Error::invalid("grid size K must be at least 1"));
        }
        Ok(Polynomial { n, d, k, terms: BTreeMap::new() })
    }

    pub fn constant(n: usize, d: u32, k: u32, c: C64) -> Result<Self> {
        let mut f = Self::new(n, d, k)?;
        f.add_term(Monomial::zero(n), c)?;
        Ok(f)
    }

    pub fn from_terms<I>(n: usize, d: u32, k: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C64)>,
    {
        let mut f = Self::new(n, d, k)?;
        for (alpha, c) in terms {
            f.add_term(Monomial(alpha), c)?;
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total-degree bound.
    pub fn d(&self) -> u32 {
        self.d
    }

    /// Grid size `K`; individual degrees are at most `K − 1`.
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, alpha: &Monomial) -> C64 {
        self.terms.get(alpha).copied().unwrap_or_default()
    }

    /// Checks that `alpha` fits this polynomial's bounds.
    pub fn check_monomial(&self, alpha: &Monomial) -> Result<()> {
        if alpha.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: alpha.len() });
        }
        if alpha.max_exponent() > self.k - 1 {
            return Err(Error::invalid(format!(
                "monomial {:?} exceeds individual degree {}",
                alpha.exponents(),
                self.k - 1
            )));
        }
        if alpha.degree() > self.d {
            return Err(Error::invalid(format!(
                "monomial {:?} exceeds total degree {}",
                alpha.exponents(),
                self.d
            )));
        }
        Ok(())
    }

    /// Adds `c z^α`. A coefficient that becomes exactly zero is removed.
    pub fn add_term(&mut self, alpha: Monomial, c: C64) -> Result<()> {
        self.check_monomial(&alpha)?;
        let entry = self.terms.entry(alpha).or_default();
        *entry += c;
        if *entry == C64::new(0.0, 0.0) {
            self.terms.retain(|_, v| *v != C64::new(0.0, 0.0));
        }
        Ok(())
    }

    /// `self + c · other`. The bounds of `self` apply to the result.
    pub fn add_scaled(&self, other: &Polynomial, c: C64) -> Result<Polynomial> {
        let mut out = self.clone();
        for (alpha, &v) in &other.terms {
            out.add_term(alpha.clone(), c * v)?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Polynomial {
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .map(|(a, &v)| (a.clone(), v * c))
            .filter(|(_, v)| *v != C64::new(0.0, 0.0))
            .collect();
        out
    }

    /// Drops coefficients with modulus at most `tol`.
    pub fn truncate(&self, tol: f64) -> Polynomial {
        let mut out = self.clone();
        out.terms.retain(|_, v| v.norm() > tol);
        out
    }

    /// Same terms with a smaller declared total degree, when they fit.
    pub fn with_degree_bound(&self, d: u32) -> Result<Polynomial> {
        let mut out = Polynomial::new(self.n, d, self.k)?;
        for (a, &v) in &self.terms {
            out.add_term(a.clone(), v)?;
        }
        Ok(out)
    }

    /// Largest coefficient difference, treating missing terms as zero.
    pub fn max_coefficient_distance(&self, other: &Polynomial) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, v) in &self.terms {
            worst = worst.max((v - other.coefficient(a)).norm());
        }
        for (a, v) in &other.terms {
            if !self.terms.contains_key(a) {
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|v| v.im == 0.0)
    }

    /// Degree actually used by the stored terms.
    pub fn actual_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// `Σ_α f̂(α) z^α`, with powers accumulated per coordinate.
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: z.len() });
        }
        let top = self.k as usize;
        let powers: Vec<Vec<C64>> = z
            .iter()
            .map(|&zj| {
                let mut row = Vec::with_capacity(top);
                let mut acc = C64::new(1.0, 0.0);
                for _ in 0..top {
                    row.push(acc);
                    acc *= zj;
                }
                row
            })
            .collect();
        Ok(self.eval_with_powers(&powers))
    }

    /// Evaluates given `powers[j][e] = z_j^e` for `e ≤ K − 1`.
    pub fn eval_with_powers(&self, powers: &[Vec<C64>]) -> C64 {
        self.terms
            .iter()
            .map(|(alpha, &c)| {
                alpha
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a > 0)
                    .fold(c, |acc, (j, &a)| acc * powers[j][a as usize])
            })
            .sum()
    }

    /// Restriction to monomials with `|α| = ℓ`.
    pub fn homogeneous_part(&self, l: u32) -> Result<Polynomial> {
        if l > self.d {
            return Err(Error::invalid(format!(
                "homogeneous degree {l} exceeds the degree bound {}",
                self.d
            )));
        }
        let mut out = self.clone();
        out.terms.retain(|a, _| a.degree() == l);
        Ok(out)
    }

    /// Σ |f̂(α)|^q raised to 1/q.
    pub fn coefficient_norm(&self, q: f64) -> f64 {
        self.terms
            .values()
            .map(|v| v.norm().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    /// Terms as `(nonzero (variable, exponent) pairs, coefficient)`.
    pub(crate) fn sparse_terms(&self) -> Vec<(Vec<(usize, u32)>, C64)> {
        self.terms
            .iter()
            .map(|(a, &c)| {
                let sp = a
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(j, &e)| (j, e))
                    .collect();
                (sp, c)
            })
            .collect()
    }
}

/// Evaluates `f` at every point of a product set, row-major with the first
/// coordinate most significant.
pub fn eval_on_product(f: &Polynomial, coords: &[Vec<C64>]) -> Result<Vec<C64>> {
    if coords.len() != f.n() {
        return Err(Error::DimensionMismatch { expected: f.n(), found: coords.len() });
    }
    let top = f.k() as usize;
    let powers: Vec<Vec<Vec<C64>>> = coords
        .iter()
        .map(|nodes| {
            nodes
                .iter()
                .map(|&y| {
                    let mut row = Vec::with_capacity(top);
                    let mut acc = C64::new(1.0, 0.0);
                    for _ in 0..top {
                        row.push(acc);
                        acc *= y;
                    }
                    row
                })
                .collect()
        })
        .collect();
    let sizes: Vec<usize> = coords.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let terms = f.sparse_terms();
    let strides = strides(&sizes);
    let chunks = par::chunk_ranges(total, 256);
    let parts = par::map_slice(&chunks, |range| {
        let mut out = Vec::with_capacity(range.len());
        for idx in range.clone() {
            let v: C64 = terms
                .iter()
                .map(|(sp, c)| {
                    sp.iter().fold(*c, |acc, &(j, e)| {
                        let t = (idx / strides[j]) % sizes[j];
                        acc * powers[j][t][e as usize]
                    })
                })
                .sum();
            out.push(v);
        }
        out
    });
    Ok(parts.into_iter().flatten().collect())
}

pub(crate) fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; sizes.len()];
    for j in (0..sizes.len().saturating_sub(1)).rev() {
        s[j] = s[j + 1] * sizes[j + 1];
    }
    s
}

/// Values of `f` on `Ω_K^n`, row-major in the root exponents.
pub fn values_on_roots_grid(f: &Polynomial, k: usize) -> Result<Vec<C64>> {
    let omega: Vec<C64> = (0..k).map(|j| root_of_unity(j, k)).collect();
    eval_on_product(f, &vec![omega; f.n()])
}

/// Recovers the polynomial of individual degree at most `K − 1` that agrees
/// with `samples` on `Ω_K^n`. Keys are root exponents `(t_1, …, t_n)` of the
/// grid point `(ω^{t_1}, …, ω^{t_n})`.
pub fn fourier_from_grid(
    samples: &HashMap<Vec<usize>, C64>,
    k: usize,
    n: usize,
) -> Result<Polynomial> {
    if k < 2 {
        return Err(Error::invalid("Fourier recovery needs K ≥ 2"));
    }
    let sizes = vec![k; n];
    let total = checked_grid_size(k, n)?;
    let st = strides(&sizes);
    let mut values = vec![C64::new(0.0, 0.0); total];
    for (idx, slot) in values.iter_mut().enumerate() {
        let key: Vec<usize> = (0..n).map(|j| (idx / st[j]) % k).collect();
        match samples.get(&key) {
            Some(&v) => *slot = v,
            None => return Err(Error::MissingSample(key)),
        }
    }
    fourier_from_values(&values, k, n)
}

fn checked_grid_size(k: usize, n: usize) -> Result<usize> {
    let total = (k as f64).powi(n as i32);
    Error::check_budget(total, 1e6)?;
    Ok(k.pow(n as u32))
}

/// Dense variant of [`fourier_from_grid`]: `values` is row-major over the root
/// exponents, first coordinate most significant.
pub fn fourier_from_values(values: &[C64], k: usize, n: usize) -> Result<Polynomial> {
    if k < 2 {
        return Err(Error::invalid("Fourier recovery needs K ≥ 2"));
    }
    let total = checked_grid_size(k, n)?;
    if values.len() != total {
        return Err(Error::DimensionMismatch { expected: total, found: values.len() });
    }
    // inverse DFT along each axis: f̂[a] = (1/K) Σ_t v[t] ω^{−a t}
    let twiddle: Vec<C64> = (0..k).map(|j| root_of_unity(j, k).conj()).collect();
    let sizes = vec![k; n];
    let st = strides(&sizes);
    let mut cur = values.to_vec();
    let mut line = vec![C64::new(0.0, 0.0); k];
    for axis in 0..n {
        let stride = st[axis];
        for base in 0..total {
            if (base / stride) % k != 0 {
                continue;
            }
            for (a, out) in line.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..k {
                    acc += cur[base + t * stride] * twiddle[(a * t) % k];
                }
                *out = acc / k as f64;
            }
            for a in 0..k {
                cur[base + a * stride] = line[a];
            }
        }
    }
    let d = (n * (k - 1)) as u32;
    let mut f = Polynomial::new(n, d, k as u32)?;
    for (idx, &c) in cur.iter().enumerate() {
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let alpha: Vec<u32> = (0..n).map(|j| ((idx / st[j]) % k) as u32).collect();
        f.terms.insert(Monomial(alpha), c);
    }
    Ok(f)
}

/// Uniform sample from the closed unit disc.
pub fn random_disc_point<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let r = rng.gen::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    C64::from_polar(r, theta)
}

/// Random polynomial with `support` distinct admissible monomials and
/// coefficients uniform in the unit disc.
pub fn random_polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: u32,
    k: u32,
    support: usize,
) -> Result<Polynomial> {
    random_with(rng, n, d, k, support, |r| random_disc_point(r))
}

/// Random polynomial with real coefficients uniform in `[−1, 1]`.
pub fn random_real_polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: u32,
    k: u32,
    support: usize,
) -> Result<Polynomial> {
    random_with(rng, n, d, k, support, |r| C64::new(r.gen_range(-1.0..=1.0), 0.0))
}

fn random_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: u32,
    k: u32,
    support: usize,
    mut coef: impl FnMut(&mut R) -> C64,
) -> Result<Polynomial> {
    let pool = admissible_monomials(n, d, k);
    if support > pool.len() {
        return Err(Error::invalid(format!(
            "support {support} exceeds the {} admissible monomials",
            pool.len()
        )));
    }
    let picks = index::sample(rng, pool.len(), support);
    let mut f = Polynomial::new(n, d, k)?;
    for i in picks.iter() {
        let c = coef(rng);
        f.add_term(pool[i].clone(), c)?;
    }
    Ok(f)
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    alpha: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    n: usize,
    d: u32,
    #[serde(rename = "K")]
    k: u32,
    terms: Vec<TermRepr>,
}

impl From<Polynomial> for PolynomialRepr {
    fn from(f: Polynomial) -> Self {
        PolynomialRepr {
            n: f.n,
            d: f.d,
            k: f.k,
            terms: f
                .terms
                .into_iter()
                .map(|(a, v)| TermRepr { alpha: a.0, re: v.re, im: v.im })
                .collect(),
        }
    }
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = Error;

    fn try_from(r: PolynomialRepr) -> Result<Self> {
        Polynomial::from_terms(
            r.n,
            r.d,
            r.k,
            r.terms.into_iter().map(|t| (t.alpha, C64::new(t.re, t.im))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Expands every monomial by naive repeated multiplication.
    fn naive_eval(f: &Polynomial, z: &[C64]) -> C64 {
        let mut total = c(0.0, 0.0);
        for (alpha, &coef) in f.terms() {
            let mut m = coef;
            for (j, &e) in alpha.exponents().iter().enumerate() {
                for _ in 0..e {
                    m = m * z[j];
                }
            }
            total += m;
        }
        total
    }

    #[test]
    fn constant_evaluates_to_itself() {
        let f = Polynomial::constant(3, 2, 3, c(5.0, 0.0)).unwrap();
        assert_eq!(f.eval(&[c(0.3, 0.1), c(-1.0, 0.0), c(0.0, 1.0)]).unwrap(), c(5.0, 0.0));
    }

    #[test]
    fn product_of_i_is_minus_one() {
        let f = Polynomial::from_terms(2, 2, 2, [(vec![1, 1], c(1.0, 0.0))]).unwrap();
        let v = f.eval(&[c(0.0, 1.0), c(0.0, 1.0)]).unwrap();
        assert!((v - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_matches_naive_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_polynomial(&mut rng, 6, 5, 4, 50).unwrap();
        assert_eq!(f.len(), 50);
        for _ in 0..20 {
            let z: Vec<C64> = (0..6).map(|_| random_disc_point(&mut rng)).collect();
            let a = f.eval(&z).unwrap();
            let b = naive_eval(&f, &z);
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        let f = Polynomial::constant(2, 1, 2, c(1.0, 0.0)).unwrap();
        assert_eq!(
            f.eval(&[c(0.0, 0.0)]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn bounds_are_enforced() {
        let mut f = Polynomial::new(2, 2, 2).unwrap();
        assert!(f.add_term(Monomial::new(vec![2, 0]), c(1.0, 0.0)).is_err());
        let mut g = Polynomial::new(3, 2, 3).unwrap();
        assert!(g.add_term(Monomial::new(vec![1, 1, 1]), c(1.0, 0.0)).is_err());
        assert!(g.add_term(Monomial::new(vec![2, 0, 0]), c(1.0, 0.0)).is_ok());
    }

    #[test]
    fn cancelling_terms_are_pruned() {
        let mut f = Polynomial::new(1, 1, 2).unwrap();
        f.add_term(Monomial::new(vec![1]), c(0.5, 0.0)).unwrap();
        f.add_term(Monomial::new(vec![1]), c(-0.5, 0.0)).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn graded_lex_order() {
        let v = admissible_monomials(2, 2, 3);
        let raw: Vec<Vec<u32>> = v.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(
            raw,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn fourier_recovers_z_on_two_points() {
        let mut samples = HashMap::new();
        samples.insert(vec![0], c(1.0, 0.0));
        samples.insert(vec![1], c(-1.0, 0.0));
        let f = fourier_from_grid(&samples, 2, 1).unwrap().truncate(1e-14);
        assert_eq!(f.len(), 1);
        assert!((f.coefficient(&Monomial::new(vec![1])) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fourier_of_constant_samples() {
        let k = 3;
        let n = 2;
        let vals = vec![c(0.25, -2.0); 9];
        let f = fourier_from_values(&vals, k, n).unwrap().truncate(1e-14);
        assert_eq!(f.len(), 1);
        assert!((f.coefficient(&Monomial::zero(2)) - c(0.25, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn fourier_missing_point_and_small_k() {
        let mut samples = HashMap::new();
        samples.insert(vec![0, 0], c(1.0, 0.0));
        assert!(matches!(fourier_from_grid(&samples, 2, 2), Err(Error::MissingSample(_))));
        assert!(fourier_from_grid(&samples, 1, 2).is_err());
    }

    #[test]
    fn fourier_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, k) in [(1usize, 5u32), (2, 3), (3, 4), (4, 2)] {
            let d = n as u32 * (k - 1);
            let pool = admissible_monomials(n, d, k).len();
            let f = random_polynomial(&mut rng, n, d, k, pool.min(6)).unwrap();
            let vals = values_on_roots_grid(&f, k as usize).unwrap();
            let g = fourier_from_values(&vals, k as usize, n).unwrap();
            assert!(f.max_coefficient_distance(&g) < 1e-10, "n={n} K={k}");
        }
    }

    #[test]
    fn homogeneous_parts() {
        let f = Polynomial::from_terms(
            2,
            2,
            2,
            [(vec![0, 0], c(1.0, 0.0)), (vec![1, 0], c(1.0, 0.0)), (vec![1, 1], c(1.0, 0.0))],
        )
        .unwrap();
        let f2 = f.homogeneous_part(2).unwrap();
        assert_eq!(f2.len(), 1);
        assert_eq!(f2.coefficient(&Monomial::new(vec![1, 1])), c(1.0, 0.0));
        let f0 = f.homogeneous_part(0).unwrap();
        assert_eq!(f0.len(), 1);
        assert_eq!(f0.coefficient(&Monomial::zero(2)), c(1.0, 0.0));
        assert!(f.homogeneous_part(3).is_err());
    }

    #[test]
    fn homogeneous_parts_sum_to_f() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_polynomial(&mut rng, 4, 3, 3, 20).unwrap();
        let mut sum = Polynomial::new(4, 3, 3).unwrap();
        for l in 0..=3 {
            sum = sum.add_scaled(&f.homogeneous_part(l).unwrap(), c(1.0, 0.0)).unwrap();
        }
        assert_eq!(sum, f);
    }

    #[test]
    fn json_layout_is_sorted_graded_lex() {
        let f = Polynomial::from_terms(
            2,
            2,
            2,
            [(vec![1, 1], c(1.0, 0.0)), (vec![0, 1], c(0.0, 2.0)), (vec![0, 0], c(3.0, 0.0))],
        )
        .unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"n":2,"d":2,"K":2,"terms":[{"alpha":[0,0],"re":3.0,"im":0.0},{"alpha":[0,1],"re":0.0,"im":2.0},{"alpha":[1,1],"re":1.0,"im":0.0}]}"#
        );
        let back: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn json_with_out_of_bounds_term_is_rejected() {
        let s = r#"{"n":1,"d":1,"K":2,"terms":[{"alpha":[2],"re":1.0,"im":0.0}]}"#;
        assert!(serde_json::from_str::<Polynomial>(s).is_err());
    }

    #[test]
    fn product_grid_matches_pointwise_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_polynomial(&mut rng, 3, 3, 3, 10).unwrap();
        let coords: Vec<Vec<C64>> =
            (0..3).map(|_| (0..3).map(|_| random_disc_point(&mut rng)).collect()).collect();
        let vals = eval_on_product(&f, &coords).unwrap();
        let mut idx = 0;
        for a in 0..3 {
            for b in 0..3 {
                for cc in 0..3 {
                    let z = [coords[0][a], coords[1][b], coords[2][cc]];
                    assert!((vals[idx] - f.eval(&z).unwrap()).norm() < 1e-13);
                    idx += 1;
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn evaluation_is_linear(seed in 0u64..1000, n in 1usize..=4, d in 1u32..=4, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let support = admissible_monomials(n, d, 3).len().min(5);
            let f = random_polynomial(&mut rng, n, d, 3, support).unwrap();
            let g = random_polynomial(&mut rng, n, d, 3, support).unwrap();
            let z: Vec<C64> = (0..n).map(|_| random_disc_point(&mut rng)).collect();
            let h = f.add_scaled(&g, c(re, im)).unwrap();
            let expected = f.eval(&z).unwrap() + c(re, im) * g.eval(&z).unwrap();
            proptest::prop_assert!((h.eval(&z).unwrap() - expected).norm() < 1e-12);
        }
    }
}
