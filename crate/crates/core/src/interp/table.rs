//! Explicit interpolation coefficients `c_ξ` over the sampling grid.
//!
//! Replacing `f` by the indicator of a grid point in the expectation gives
//!
//! ```text
//! T_m[ξ] = m^{−units} Σ_P ∏_ℓ law_{G_ℓ}[ξ|G_ℓ],
//! law_G[η] = ∫_0^D r(t) 1{w_u(t) = η_u for u ∈ G} dt,
//! ```
//!
//! and `c_ξ = Σ_j a_j T_{m_j}[ξ]`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::engine::{advance, decode};
use super::InterpolationPlan;
use crate::cplx::{powi, ReIm};
use crate::par;
use crate::poly::{strides, Monomial, Polynomial};
use crate::scheme::{refine, ComplexSum, NodeScheme};
use crate::{Error, Result, C64};

/// Largest table the extractor will allocate.
pub const MAX_TABLE: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    #[serde(with = "crate::cplx::vec")]
    pub xi: Vec<C64>,
    pub re: f64,
    pub im: f64,
}

impl TableEntry {
    pub fn c(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// Coefficients `c_ξ` with `Σ_ξ c_ξ f(ξ) = f(z)` for admissible `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    #[serde(with = "crate::cplx::vec")]
    pub z: Vec<C64>,
    pub l1: f64,
    pub entries: Vec<TableEntry>,
}

impl CoefficientTable {
    /// `Σ_ξ c_ξ f(ξ)`.
    pub fn apply(&self, f: &Polynomial) -> Result<C64> {
        let mut acc = ComplexSum::default();
        for e in &self.entries {
            acc.add(e.c() * f.eval(&e.xi)?);
        }
        Ok(acc.value())
    }

    /// `|Σ_ξ c_ξ ξ^α − z^α|`.
    pub fn monomial_residual(&self, alpha: &Monomial) -> f64 {
        let mut acc = ComplexSum::default();
        for e in &self.entries {
            acc.add(e.c() * alpha.eval(&e.xi));
        }
        (acc.value() - alpha.eval(&self.z)).norm()
    }

    /// Largest [`monomial_residual`](Self::monomial_residual) over `basis`.
    pub fn reproduction_residual(&self, basis: &[Monomial]) -> f64 {
        let per = par::map_slice(basis, |a| self.monomial_residual(a));
        per.into_iter().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> C64 {
        let mut acc = ComplexSum::default();
        for e in &self.entries {
            acc.add(e.c());
        }
        acc.value()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Distinct projected points of a unit and the label → point map.
struct UnitGrid {
    points: Vec<Vec<C64>>,
    remap: Vec<usize>,
}

fn unit_grid(points: &[Vec<C64>]) -> UnitGrid {
    let mut distinct: Vec<Vec<C64>> = Vec::new();
    let mut remap = Vec::with_capacity(points.len());
    for p in points {
        match distinct.iter().position(|q| q == p) {
            Some(i) => remap.push(i),
            None => {
                distinct.push(p.clone());
                remap.push(distinct.len() - 1);
            }
        }
    }
    UnitGrid { points: distinct, remap }
}

/// Sparse joint law of the labels of the units in `mask`, as
/// `(table offset, Σ len · sign)` pairs.
fn joint_law(
    plan: &InterpolationPlan,
    grids: &[UnitGrid],
    stride: &[usize],
    mask: u64,
) -> Result<Vec<(usize, C64)>> {
    let members: Vec<usize> = (0..grids.len()).filter(|i| mask >> i & 1 == 1).collect();
    let ws: Vec<_> = members.iter().map(|&i| &plan.units()[i].w).collect();
    let cells = refine(plan.r(), &ws)?;
    let mut acc: BTreeMap<usize, ComplexSum> = BTreeMap::new();
    for cell in &cells {
        let offset: usize = members
            .iter()
            .zip(&cell.labels)
            .map(|(&u, &l)| grids[u].remap[l] * stride[u])
            .sum();
        acc.entry(offset).or_default().add(cell.sign.apply(C64::new(cell.len, 0.0)));
    }
    Ok(acc.into_iter().map(|(o, s)| (o, s.value())).collect())
}

/// Estimated work for a table over `plan`.
pub fn table_cost(plan: &InterpolationPlan) -> f64 {
    let size: f64 = plan
        .units()
        .iter()
        .map(|u| unit_grid(&u.points).points.len() as f64)
        .product();
    let units = plan.units().len() as i32;
    plan.m_list()
        .iter()
        .map(|&m| (m as f64).powi(units) * (size + plan.total_pieces() as f64))
        .sum()
}

/// `T_m` as a dense table in grid order.
fn indicator_table(
    laws: &HashMap<u64, Vec<(usize, C64)>>,
    j0: C64,
    n_units: usize,
    m: u64,
    size: usize,
) -> Vec<C64> {
    let m = m as usize;
    let total = m.pow(n_units as u32);
    // fixed chunking keeps the reduction order independent of threads
    let chunks = (1usize << 21) / size.max(1);
    let ranges = par::chunk_ranges(total, chunks.clamp(1, 64));
    let partial = par::map_slice(&ranges, |range| {
        let mut table = vec![C64::new(0.0, 0.0); size];
        let mut p = decode(range.start, m, n_units);
        let mut cur: Vec<(usize, C64)> = Vec::new();
        let mut next: Vec<(usize, C64)> = Vec::new();
        let mut masks = vec![0u64; m];
        for _ in range.clone() {
            masks.iter_mut().for_each(|x| *x = 0);
            for (u, &slot) in p.iter().enumerate() {
                masks[slot] |= 1 << u;
            }
            let empty = masks.iter().filter(|&&x| x == 0).count();
            cur.clear();
            cur.push((0, powi(j0, empty as u32)));
            for mask in masks.iter().filter(|&&x| x != 0) {
                next.clear();
                for &(o, v) in &cur {
                    for &(o2, v2) in &laws[mask] {
                        next.push((o + o2, v * v2));
                    }
                }
                std::mem::swap(&mut cur, &mut next);
            }
            for &(o, v) in &cur {
                table[o] += v;
            }
            advance(&mut p, m);
        }
        table
    });
    let mut out = vec![C64::new(0.0, 0.0); size];
    for part in partial {
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    let scale = 1.0 / total as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Coefficient table of `plan` by enumeration of all maps `P`.
pub fn coefficients(plan: &InterpolationPlan) -> Result<CoefficientTable> {
    let units = plan.units();
    let n_units = units.len();
    if n_units > 24 {
        return Err(Error::invalid("coefficient tables support at most 24 units"));
    }
    let grids: Vec<UnitGrid> = units.iter().map(|u| unit_grid(&u.points)).collect();
    let sizes: Vec<usize> = grids.iter().map(|g| g.points.len()).collect();
    let size_f: f64 = sizes.iter().map(|&s| s as f64).product();
    if size_f > MAX_TABLE as f64 {
        return Err(Error::Budget { estimated: size_f, limit: MAX_TABLE as f64 });
    }
    Error::check_budget(table_cost(plan), plan.budget())?;
    let size = size_f as usize;
    let stride = strides(&sizes);
    let masks: Vec<u64> = (1..1u64 << n_units).collect();
    let laws: Vec<_> = par::map_slice(&masks, |&mask| joint_law(plan, &grids, &stride, mask));
    let laws: HashMap<u64, Vec<(usize, C64)>> =
        masks.into_iter().zip(laws).map(|(m, l)| Ok((m, l?))).collect::<Result<_>>()?;
    let mut j0 = ComplexSum::default();
    for &(len, sign) in plan.r().pieces() {
        j0.add(sign.apply(C64::new(len, 0.0)));
    }
    let j0 = j0.value();

    let mut coef = vec![ComplexSum::default(); size];
    for (&m, &a) in plan.m_list().iter().zip(plan.a_list()) {
        let t = indicator_table(&laws, j0, n_units, m, size);
        for (c, v) in coef.iter_mut().zip(t) {
            c.add(v * a);
        }
    }

    let mut entries = Vec::with_capacity(size);
    let mut l1 = 0.0;
    for (idx, c) in coef.iter().enumerate() {
        let c = c.value();
        let mut xi = Vec::with_capacity(plan.n());
        for (u, g) in grids.iter().enumerate() {
            xi.extend_from_slice(&g.points[(idx / stride[u]) % sizes[u]]);
        }
        l1 += c.norm();
        entries.push(TableEntry { xi, re: c.re, im: c.im });
    }
    Ok(CoefficientTable { z: plan.target().to_vec(), l1, entries })
}

/// Monomials the plan reproduces: per unit an exponent from its scheme
/// (`0..K` for a coordinate, `Λ` for a block), total degree at most `d`.
pub fn reproduction_basis(plan: &InterpolationPlan) -> Vec<Monomial> {
    let d = plan.d();
    let per_unit: Vec<Vec<Vec<u32>>> = plan
        .schemes()
        .iter()
        .zip(plan.units())
        .map(|(s, u)| match s {
            NodeScheme::Coordinate { nodes } => (0..nodes.len() as u32).map(|e| vec![e]).collect(),
            NodeScheme::Block(b) => b
                .lambda()
                .iter()
                .filter(|l| l[u.width..].iter().all(|&e| e == 0))
                .map(|l| l[..u.width].to_vec())
                .collect(),
        })
        .collect();
    let mut out = Vec::new();
    let mut cur: Vec<u32> = Vec::with_capacity(plan.n());
    fn rec(i: usize, per: &[Vec<Vec<u32>>], d: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == per.len() {
            out.push(Monomial::new(cur.clone()));
            return;
        }
        let used: u32 = cur.iter().sum();
        for e in &per[i] {
            if used + e.iter().sum::<u32>() <= d {
                let len = cur.len();
                cur.extend_from_slice(e);
                rec(i + 1, per, d, cur, out);
                cur.truncate(len);
            }
        }
    }
    rec(0, &per_unit, d, &mut cur, &mut out);
    out.sort();
    out.dedup();
    out
}

/// JSON-friendly grid listing used by reports.
pub fn grid_points(table: &CoefficientTable) -> Vec<Vec<ReIm>> {
    table
        .entries
        .iter()
        .map(|e| e.xi.iter().map(|&z| ReIm::from(z)).collect())
        .collect()
}
