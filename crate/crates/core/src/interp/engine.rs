//! Exact evaluation of `D^m E[∏ r(U_ℓ) f(W(U_P))]`.
//!
//! For a fixed `P`, the slots are independent, so the expectation of a
//! monomial factors into one-dimensional integrals
//!
//! ```text
//! J(G, α) = ∫_0^D r(t) ∏_{u ∈ G} y_u(w_u(t))^{α_u} dt
//! ```
//!
//! over the common refinement of `r` and the `w` maps of the units sharing a
//! slot. `J(∅) = ∫ r = 1`, so `D^m E = mean_P ∏_ℓ J(G_ℓ)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::partition::{block_masks, block_count, induce_probability_f64, set_partitions};
use super::InterpolationPlan;
use crate::cplx::powi;
use crate::linalg;
use crate::par;
use crate::poly::{Monomial, Polynomial};
use crate::scheme::{refine, Cell, ComplexSum};
use crate::{Error, Result, C64};

/// Which engine evaluates an expectation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Sum over all `m^{units}` maps `P`.
    Enumeration,
    /// Sum over the partitions of each monomial's support.
    Partitions,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumeration" | "a" | "A" => Ok(Engine::Enumeration),
            "partitions" | "b" | "B" => Ok(Engine::Partitions),
            other => Err(Error::invalid(format!("unknown engine {other:?}"))),
        }
    }
}

/// One evaluated expectation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expectation {
    pub m: u64,
    /// `E[∏ r(U_ℓ) f(W(U_P))]`.
    pub value: C64,
    /// `D^m` times `value`.
    pub scaled: C64,
    /// Set when `m < d`; the value is still exact but outside the range the
    /// interpolation identity is stated for.
    pub below_degree: bool,
}

/// Fixed number of reduction chunks, so sums do not depend on thread count.
const CHUNKS: usize = 64;

/// A monomial term rewritten over units: `factors[i]` is the exponent
/// slice of support unit `units[i]`.
struct UnitTerm {
    coef: C64,
    units: Vec<usize>,
    factors: Vec<Vec<u32>>,
}

fn unit_terms(plan: &InterpolationPlan, f: &Polynomial) -> Result<Vec<UnitTerm>> {
    if f.n() != plan.n() {
        return Err(Error::DimensionMismatch { expected: plan.n(), found: f.n() });
    }
    let units = plan.units();
    let mut out = Vec::with_capacity(f.len());
    for (alpha, &coef) in f.terms() {
        let e = alpha.exponents();
        let mut t = UnitTerm { coef, units: Vec::new(), factors: Vec::new() };
        for (i, u) in units.iter().enumerate() {
            let slice = &e[u.start..u.start + u.width];
            if slice.iter().any(|&x| x > 0) {
                t.units.push(i);
                t.factors.push(slice.to_vec());
            }
        }
        out.push(t);
    }
    Ok(out)
}

fn cells_for(plan: &InterpolationPlan, mask: u64) -> Result<Vec<Cell>> {
    let ws: Vec<_> = plan
        .units()
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, u)| &u.w)
        .collect();
    refine(plan.r(), &ws)
}

/// Refinement cells of every unit mask in `masks`.
fn cell_cache(plan: &InterpolationPlan, masks: Vec<u64>) -> Result<HashMap<u64, Vec<Cell>>> {
    let mut masks = masks;
    masks.sort_unstable();
    masks.dedup();
    let cells = par::map_slice(&masks, |&m| cells_for(plan, m));
    masks.into_iter().zip(cells).map(|(m, c)| Ok((m, c?))).collect()
}

fn submasks(mask: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut s = mask;
    while s != 0 {
        out.push(s);
        s = (s - 1) & mask;
    }
    out
}

/// `J(G, α)` for `G` given by `sub` (positions into `term.units`).
fn slot_integral(plan: &InterpolationPlan, cells: &[Cell], term: &UnitTerm, sub: u64) -> C64 {
    let units = plan.units();
    let mut acc = ComplexSum::default();
    for cell in cells {
        let mut v = C64::new(cell.len, 0.0);
        // cell labels follow ascending unit order, as do the term's units
        for (li, pos) in (0..term.units.len()).filter(|p| sub >> p & 1 == 1).enumerate() {
            let u = &units[term.units[pos]];
            let point = &u.points[cell.labels[li]];
            for (y, &a) in point.iter().zip(&term.factors[pos]) {
                if a > 0 {
                    v *= powi(*y, a);
                }
            }
        }
        acc.add(cell.sign.apply(v));
    }
    acc.value()
}

fn unit_mask(term: &UnitTerm, sub: u64) -> u64 {
    (0..term.units.len())
        .filter(|p| sub >> p & 1 == 1)
        .fold(0u64, |m, p| m | 1 << term.units[p])
}

/// `J` for every non-empty sub-support of every term, indexed by the
/// sub-support bitmask over the term's own support positions.
fn term_integrals(plan: &InterpolationPlan, terms: &[UnitTerm]) -> Result<Vec<HashMap<u64, C64>>> {
    let mut all_masks = Vec::new();
    for t in terms {
        let full = (1u64 << t.units.len()) - 1;
        for s in submasks(full) {
            all_masks.push(unit_mask(t, s));
        }
    }
    let cache = cell_cache(plan, all_masks)?;
    Ok(par::map_slice(terms, |t| {
        let full = (1u64 << t.units.len()) - 1;
        submasks(full)
            .into_iter()
            .map(|s| (s, slot_integral(plan, &cache[&unit_mask(t, s)], t, s)))
            .collect()
    }))
}

fn empty_integral(plan: &InterpolationPlan) -> C64 {
    let mut acc = ComplexSum::default();
    for &(len, sign) in plan.r().pieces() {
        acc.add(sign.apply(C64::new(len, 0.0)));
    }
    acc.value()
}

fn check_terms(terms: &[UnitTerm]) -> Result<()> {
    if terms.iter().any(|t| t.units.len() > 20) {
        return Err(Error::invalid("monomial supports above 20 units are not supported"));
    }
    Ok(())
}

fn scaled_by_enumeration(plan: &InterpolationPlan, f: &Polynomial, m: u64) -> Result<C64> {
    let n_units = plan.units().len();
    let maps = (m as f64).powi(n_units as i32);
    let terms = unit_terms(plan, f)?;
    check_terms(&terms)?;
    let work: usize = terms.iter().map(|t| t.units.len() + 1).sum();
    Error::check_budget(maps * (plan.total_pieces() + work) as f64, plan.budget())?;
    let ints = term_integrals(plan, &terms)?;
    let j0 = empty_integral(plan);
    let j0_pows: Vec<C64> = (0..=m).map(|k| powi(j0, k as u32)).collect();
    let total = maps as usize;
    let ranges = par::chunk_ranges(total, CHUNKS);
    let partial = par::map_slice(&ranges, |range| {
        let mut p = decode(range.start, m as usize, n_units);
        let mut acc = ComplexSum::default();
        let mut slots: Vec<u64> = Vec::new();
        let mut slot_of: Vec<usize> = Vec::new();
        for _ in range.clone() {
            for (t, table) in terms.iter().zip(&ints) {
                slots.clear();
                slot_of.clear();
                for (pos, &u) in t.units.iter().enumerate() {
                    match slot_of.iter().position(|&s| s == p[u]) {
                        Some(i) => slots[i] |= 1 << pos,
                        None => {
                            slot_of.push(p[u]);
                            slots.push(1 << pos);
                        }
                    }
                }
                let mut v = t.coef * j0_pows[m as usize - slots.len()];
                for s in &slots {
                    v *= table[s];
                }
                acc.add(v);
            }
            advance(&mut p, m as usize);
        }
        acc.value()
    });
    let mut acc = ComplexSum::default();
    for v in partial {
        acc.add(v);
    }
    Ok(acc.value() / maps)
}

/// Digits of `index` in base `m`, most significant first.
pub(crate) fn decode(mut index: usize, m: usize, len: usize) -> Vec<usize> {
    let mut p = vec![0usize; len];
    for d in p.iter_mut().rev() {
        *d = index % m;
        index /= m;
    }
    p
}

pub(crate) fn advance(p: &mut [usize], m: usize) {
    for d in p.iter_mut().rev() {
        *d += 1;
        if *d < m {
            return;
        }
        *d = 0;
    }
}

fn scaled_by_partitions(plan: &InterpolationPlan, f: &Polynomial, m: u64) -> Result<C64> {
    let terms = unit_terms(plan, f)?;
    check_terms(&terms)?;
    if terms.iter().any(|t| t.units.len() > 12) {
        return Err(Error::invalid("partition engine supports at most 12 units per monomial"));
    }
    let j0 = empty_integral(plan);
    let ints = term_integrals(plan, &terms)?;
    let values = par::map_range(terms.len(), |i| {
        let t = &terms[i];
        let table = &ints[i];
        let s = t.units.len();
        let mut acc = ComplexSum::default();
        for rgs in set_partitions(s) {
            let b = block_count(&rgs);
            if b as u64 > m {
                continue;
            }
            let mut v = C64::new(induce_probability_f64(m, s, b), 0.0) * powi(j0, (m - b as u64) as u32);
            for mask in block_masks(&rgs) {
                v *= table[&mask];
            }
            acc.add(v);
        }
        t.coef * acc.value()
    });
    let mut acc = ComplexSum::default();
    for v in values {
        acc.add(v);
    }
    Ok(acc.value())
}

/// Exact `E[∏_{ℓ ≤ m} r(U_ℓ) f(W(U_P))]` with the chosen engine.
pub fn expectation(plan: &InterpolationPlan, f: &Polynomial, m: u64, engine: Engine) -> Result<Expectation> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let scaled = match engine {
        Engine::Enumeration => scaled_by_enumeration(plan, f, m)?,
        Engine::Partitions => scaled_by_partitions(plan, f, m)?,
    };
    Ok(Expectation {
        m,
        value: scaled / plan.big_d().powi(m as i32),
        scaled,
        below_degree: m < plan.d() as u64,
    })
}

/// `Σ_j a_j D^{m_j} E_{m_j}`, which equals `f(z)` for admissible `f`.
pub fn interpolate(plan: &InterpolationPlan, f: &Polynomial, engine: Engine) -> Result<C64> {
    let mut acc = ComplexSum::default();
    for (&m, &a) in plan.m_list().iter().zip(plan.a_list()) {
        acc.add(expectation(plan, f, m, engine)?.scaled * a);
    }
    Ok(acc.value())
}

/// Residuals `f(z) − D^m E_m` and their fit by a polynomial in `1/m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualCurve {
    pub points: Vec<(u64, C64)>,
    /// `b_1, …, b_{d−1}` of `q(t) = Σ b_i t^i`, fitted on the first `d`
    /// residuals.
    pub fit: Vec<C64>,
    /// Largest misfit on the points used for fitting.
    pub fit_error: f64,
    /// Largest misfit on the remaining points.
    pub extrapolation_error: f64,
    /// `|Σ_j a_j · residual(m_j)|` over the plan's own `m` sequence.
    pub affine_residual: f64,
}

/// Residual curve over `m_range`, using the partition engine.
pub fn residual_curve(plan: &InterpolationPlan, f: &Polynomial, m_range: &[u64]) -> Result<ResidualCurve> {
    let fz = f.eval(plan.target())?;
    let d = plan.d() as usize;
    let mut cache: HashMap<u64, C64> = HashMap::new();
    let mut residual = |m: u64| -> Result<C64> {
        if let Some(v) = cache.get(&m) {
            return Ok(*v);
        }
        let v = fz - expectation(plan, f, m, Engine::Partitions)?.scaled;
        cache.insert(m, v);
        Ok(v)
    };
    let mut points = Vec::with_capacity(m_range.len());
    for &m in m_range {
        points.push((m, residual(m)?));
    }
    let mut affine = ComplexSum::default();
    for (&m, &a) in plan.m_list().iter().zip(plan.a_list()) {
        affine.add(residual(m)? * a);
    }
    let n_fit = d.min(points.len());
    let q = |b: &[C64], m: u64| -> C64 {
        let t = 1.0 / m as f64;
        b.iter().enumerate().map(|(i, c)| c * t.powi(i as i32 + 1)).sum()
    };
    let fit = if d >= 2 && n_fit > 0 {
        let design: Vec<Vec<f64>> = points[..n_fit]
            .iter()
            .map(|&(m, _)| (1..d).map(|i| (1.0 / m as f64).powi(i as i32)).collect())
            .collect();
        let rhs: Vec<C64> = points[..n_fit].iter().map(|p| p.1).collect();
        linalg::least_squares(&design, &rhs)?
    } else {
        Vec::new()
    };
    let misfit = |pts: &[(u64, C64)]| pts.iter().map(|&(m, r)| (r - q(&fit, m)).norm()).fold(0.0, f64::max);
    Ok(ResidualCurve {
        fit_error: misfit(&points[..n_fit]),
        extrapolation_error: misfit(&points[n_fit..]),
        points,
        fit,
        affine_residual: affine.value().norm(),
    })
}

/// `monomial` as a one-term polynomial in the plan's dimension.
pub fn monomial_polynomial(plan: &InterpolationPlan, alpha: &Monomial) -> Result<Polynomial> {
    let deg = alpha.degree().max(1);
    let kmax = alpha.max_exponent() + 1;
    Polynomial::from_terms(plan.n(), deg, kmax.max(2), [(alpha.exponents().to_vec(), C64::new(1.0, 0.0))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::InterpolationPlan;
    use crate::poly::random_disc_point;
    use crate::scheme::{LPolicy, NodeScheme};
    use crate::vander::NodeVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn omega(k: usize) -> NodeScheme {
        NodeScheme::coordinate(NodeVector::roots_of_unity(k).unwrap())
    }

    fn mono(n: usize, e: &[u32]) -> Polynomial {
        let deg = e.iter().sum::<u32>().max(1);
        let k = e.iter().copied().max().unwrap_or(0) + 2;
        let mut v = vec![0u32; n];
        v[..e.len()].copy_from_slice(e);
        Polynomial::from_terms(n, deg, k, [(v, C64::new(1.0, 0.0))]).unwrap()
    }

    /// Direct midpoint enumeration: for every `P` and every slot, integrate
    /// by walking each elementary interval of the joint breakpoints.
    fn brute_force(plan: &InterpolationPlan, f: &Polynomial, m: usize) -> C64 {
        let units = plan.units();
        let d = plan.big_d();
        let mut bps: Vec<f64> = plan.r().breakpoints();
        for u in units {
            bps.extend(u.w.breakpoints());
        }
        bps.push(0.0);
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup();
        let n_units = units.len();
        let mut total = C64::new(0.0, 0.0);
        for idx in 0..m.pow(n_units as u32) {
            let p = decode(idx, m, n_units);
            for (alpha, &coef) in f.terms() {
                let e = alpha.exponents();
                let mut prod = coef;
                for slot in 0..m {
                    let mut integral = C64::new(0.0, 0.0);
                    for win in bps.windows(2) {
                        let (a, b) = (win[0], win[1]);
                        if b - a <= 0.0 || a >= d {
                            continue;
                        }
                        let mid = 0.5 * (a + b);
                        let mut v = plan.r().value_at(mid).unwrap().value() * (b - a);
                        for (ui, u) in units.iter().enumerate() {
                            if p[ui] != slot {
                                continue;
                            }
                            let label = u.w.value_at(mid).unwrap();
                            for (c, y) in u.points[label].iter().enumerate() {
                                v *= powi(*y, e[u.start + c]);
                            }
                        }
                        integral += v;
                    }
                    prod *= integral;
                }
                total += prod;
            }
        }
        total / (m.pow(n_units as u32) as f64)
    }

    #[test]
    fn constant_has_unit_scaled_expectation() {
        let z = vec![C64::new(0.3, 0.2); 3];
        let plan = InterpolationPlan::build(vec![omega(3); 3], 2, &z, LPolicy::PerRun).unwrap();
        let one = Polynomial::constant(3, 2, 3, C64::new(1.0, 0.0)).unwrap();
        for engine in [Engine::Enumeration, Engine::Partitions] {
            for m in 1..=4 {
                let e = expectation(&plan, &one, m, engine).unwrap();
                assert!((e.scaled - 1.0).norm() < 1e-12);
                assert!((e.value * plan.big_d().powi(m as i32) - 1.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn univariate_monomials_are_exact_for_every_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 2..=5usize {
            let z = vec![random_disc_point(&mut rng)];
            let plan = InterpolationPlan::build(vec![omega(k)], 1, &z, LPolicy::PerRun).unwrap();
            for a in 0..k as u32 {
                let f = mono(1, &[a]);
                for m in 1..=5 {
                    for engine in [Engine::Enumeration, Engine::Partitions] {
                        let e = expectation(&plan, &f, m, engine).unwrap();
                        assert!((e.scaled - powi(z[0], a)).norm() < 1e-12, "k={k} a={a} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn product_example_matches_brute_force() {
        let z = vec![C64::new(0.5, 0.0), C64::new(0.0, 0.5)];
        let plan = InterpolationPlan::build(vec![omega(2), omega(2)], 2, &z, LPolicy::PerRun).unwrap();
        let f = mono(2, &[1, 1]);
        let a = expectation(&plan, &f, 2, Engine::Enumeration).unwrap();
        let b = expectation(&plan, &f, 2, Engine::Partitions).unwrap();
        let c = brute_force(&plan, &f, 2);
        assert!((a.scaled - b.scaled).norm() < 1e-12);
        assert!((a.scaled - c).norm() < 1e-12);
        // the two units share a slot with probability 1/2
        assert!((a.scaled - z[0] * z[1]).norm() > 1e-6);
        assert!(!a.below_degree);
    }

    #[test]
    fn below_degree_is_flagged() {
        let z = vec![C64::new(0.1, 0.0); 2];
        let plan = InterpolationPlan::build(vec![omega(3), omega(3)], 3, &z, LPolicy::PerRun).unwrap();
        let e = expectation(&plan, &mono(2, &[1, 1]), 2, Engine::Partitions).unwrap();
        assert!(e.below_degree);
    }

    #[test]
    fn engines_agree_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4usize {
            for k in [2usize, 3] {
                let z: Vec<C64> = (0..n).map(|_| random_disc_point(&mut rng)).collect();
                let plan = InterpolationPlan::build(vec![omega(k); n], 2, &z, LPolicy::PerRun).unwrap();
                let pool = crate::poly::admissible_monomials(n, 3, k as u32).len();
                let f = crate::poly::random_polynomial(&mut rng, n, 3, k as u32, pool.min(6)).unwrap();
                for m in 1..=4 {
                    let a = expectation(&plan, &f, m, Engine::Enumeration).unwrap();
                    let b = expectation(&plan, &f, m, Engine::Partitions).unwrap();
                    assert!((a.scaled - b.scaled).norm() < 1e-11, "n={n} k={k} m={m}");
                }
                let pool = crate::poly::admissible_monomials(n, 2, k as u32).len();
                let small = crate::poly::random_polynomial(&mut rng, n, 2, k as u32, pool.min(4)).unwrap();
                let c = brute_force(&plan, &small, 2);
                let a = expectation(&plan, &small, 2, Engine::Enumeration).unwrap();
                assert!((a.scaled - c).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_degree_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z: Vec<C64> = (0..3).map(|_| random_disc_point(&mut rng)).collect();
        let plan = InterpolationPlan::build(vec![omega(3); 3], 2, &z, LPolicy::PerRun).unwrap();
        let f = crate::poly::random_polynomial(&mut rng, 3, 2, 3, 8).unwrap();
        let want = f.eval(&z).unwrap();
        for engine in [Engine::Enumeration, Engine::Partitions] {
            let got = interpolate(&plan, &f, engine).unwrap();
            assert!((got - want).norm() < 1e-9 * plan.l1_bound().max(1.0));
        }
    }

    #[test]
    fn degree_one_residuals_vanish() {
        let z = vec![C64::new(0.2, -0.4), C64::new(0.6, 0.1)];
        let plan = InterpolationPlan::build(vec![omega(2); 2], 1, &z, LPolicy::PerRun).unwrap();
        let f = mono(2, &[1, 0]);
        let curve = residual_curve(&plan, &f, &[1, 2, 3, 4, 5]).unwrap();
        assert!(curve.points.iter().all(|p| p.1.norm() < 1e-12));
    }

    #[test]
    fn degree_two_residuals_follow_one_over_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let z: Vec<C64> = (0..3).map(|_| random_disc_point(&mut rng)).collect();
        let plan = InterpolationPlan::build(vec![omega(2); 3], 2, &z, LPolicy::PerRun).unwrap();
        let one = C64::new(1.0, 0.0);
        let f = Polynomial::from_terms(
            3,
            2,
            2,
            [(vec![1, 1, 0], one), (vec![0, 1, 1], one)],
        )
        .unwrap();
        let curve = residual_curve(&plan, &f, &[2, 3, 4, 5, 6]).unwrap();
        assert_eq!(curve.fit.len(), 1);
        assert!(curve.fit[0].norm() > 1e-6);
        assert!(curve.extrapolation_error < 1e-9, "{}", curve.extrapolation_error);
        assert!(curve.affine_residual < 1e-10);
    }

    #[test]
    fn budget_guard_refuses_large_enumeration() {
        let z = vec![C64::new(0.0, 0.0); 8];
        let plan = InterpolationPlan::build(vec![omega(2); 8], 2, &z, LPolicy::PerRun)
            .unwrap()
            .with_budget(1e3);
        let f = mono(8, &[1, 1]);
        assert!(matches!(
            expectation(&plan, &f, 3, Engine::Enumeration),
            Err(Error::Budget { .. })
        ));
    }
}
