//! Interpolation plans and the two expectation engines.
//!
//! A plan fixes, for a target `z`, one node scheme per unit (a coordinate or a
//! block of coordinates), the split of each unit's moment coefficients at a
//! common `L`, and the affine weights `a_j` for `m_j = d + j`. Then
//!
//! ```text
//! f(z) = Σ_j a_j D^{m_j} E_{U,P}[ ∏_{ℓ ≤ m_j} r(U_ℓ) · f(W(U_P)) ]
//! ```
//!
//! for every `f` of total degree at most `d` whose exponents each unit's scheme
//! reproduces. Expectations are computed exactly as finite sums over piece
//! refinements, either by enumerating all maps `P` or through the partitions
//! of each monomial's support.

pub mod engine;
pub mod partition;
pub mod table;

use serde::{Deserialize, Serialize};

use crate::scheme::{self, build_r, build_w, split, CoefficientSplit, LPolicy, NodeScheme, PiecewiseMap, Sign};
use crate::vander::{self, exact};
use crate::{Error, Result, C64};

pub use engine::{expectation, interpolate, residual_curve, Engine, Expectation, ResidualCurve};
pub use table::{coefficients, CoefficientTable, TableEntry};

/// Default bound on elementary operations for one engine call.
pub const DEFAULT_BUDGET: f64 = 1e8;

/// One coordinate or block of the plan, with its split and `w` map.
#[derive(Clone, Debug, PartialEq)]
pub struct Unit {
    /// First coordinate covered.
    pub start: usize,
    /// Number of covered coordinates below `n` (trailing block coordinates
    /// beyond `n` are projected away).
    pub width: usize,
    /// Node coordinates restricted to the covered range.
    pub points: Vec<Vec<C64>>,
    pub split: CoefficientSplit,
    pub w: PiecewiseMap<usize>,
}

/// Everything needed to evaluate the interpolation formula at one target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanRepr", into = "PlanRepr")]
pub struct InterpolationPlan {
    n: usize,
    d: u32,
    m_list: Vec<u64>,
    a_list: Vec<f64>,
    l: f64,
    big_d: f64,
    l_policy: LPolicy,
    schemes: Vec<NodeScheme>,
    target: Vec<C64>,
    budget: f64,
    units: Vec<Unit>,
    r: PiecewiseMap<Sign>,
}

#[derive(Serialize, Deserialize)]
struct PlanRepr {
    n: usize,
    d: u32,
    m: Vec<u64>,
    a: Vec<f64>,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "D")]
    big_d: f64,
    l_policy: LPolicy,
    schemes: Vec<NodeScheme>,
    #[serde(with = "crate::cplx::vec")]
    z: Vec<C64>,
    budget: f64,
}

impl TryFrom<PlanRepr> for InterpolationPlan {
    type Error = Error;

    fn try_from(r: PlanRepr) -> Result<Self> {
        let target = r.target_checked()?;
        let mut plan =
            InterpolationPlan::assemble(r.schemes, r.n, r.d, target, r.l, r.l_policy, r.m, r.a)?;
        plan.budget = r.budget;
        if plan.big_d != r.big_d {
            return Err(Error::invalid(format!("D = {} does not equal 4L + 1", r.big_d)));
        }
        Ok(plan)
    }
}

impl PlanRepr {
    fn target_checked(&self) -> Result<Vec<C64>> {
        if self.z.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.z.len() });
        }
        Ok(self.z.clone())
    }
}

impl From<InterpolationPlan> for PlanRepr {
    fn from(p: InterpolationPlan) -> Self {
        PlanRepr {
            n: p.n,
            d: p.d,
            m: p.m_list,
            a: p.a_list,
            l: p.l,
            big_d: p.big_d,
            l_policy: p.l_policy,
            schemes: p.schemes,
            z: p.target,
            budget: p.budget,
        }
    }
}

/// Weights for `m_j = d + j` as doubles.
pub fn default_weights(d: u32) -> Result<(Vec<u64>, Vec<f64>)> {
    let m: Vec<u64> = (0..d as u64).map(|j| d as u64 + j).collect();
    let a = vander::weights_f64(&exact::elimination_weights(d)?);
    Ok((m, a))
}

impl InterpolationPlan {
    /// Plan over one coordinate scheme per coordinate of `z`.
    pub fn build(grid: Vec<NodeScheme>, d: u32, z: &[C64], policy: LPolicy) -> Result<Self> {
        if grid.iter().any(|s| s.width() != 1) {
            return Err(Error::invalid("coordinate plans need one-coordinate schemes"));
        }
        Self::build_units(grid, z.len(), d, z, policy)
    }

    /// Plan over block schemes covering `n = z.len()` coordinates in order.
    /// The last block may extend past `n`; its extra coordinates are
    /// projected away.
    pub fn build_blocks(blocks: Vec<NodeScheme>, d: u32, z: &[C64], policy: LPolicy) -> Result<Self> {
        Self::build_units(blocks, z.len(), d, z, policy)
    }

    fn build_units(schemes: Vec<NodeScheme>, n: usize, d: u32, z: &[C64], policy: LPolicy) -> Result<Self> {
        let (m, a) = default_weights(d)?;
        Self::build_with_weights(schemes, n, d, z, policy, m, a)
    }

    /// Plan with an explicit `m` sequence and weights.
    pub fn build_with_weights(
        schemes: Vec<NodeScheme>,
        n: usize,
        d: u32,
        z: &[C64],
        policy: LPolicy,
        m_list: Vec<u64>,
        a_list: Vec<f64>,
    ) -> Result<Self> {
        check_layout(&schemes, n)?;
        if z.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: z.len() });
        }
        let targets = unit_targets(&schemes, z)?;
        let pairs: Vec<(&NodeScheme, Vec<C64>)> = schemes.iter().zip(targets).collect();
        let l = scheme::resolve_l(policy, &pairs)?;
        Self::assemble(schemes, n, d, z.to_vec(), l, policy, m_list, a_list)
    }

    /// Plan with weights for an arbitrary sequence of distinct `m` values.
    pub fn build_with_m(
        schemes: Vec<NodeScheme>,
        d: u32,
        z: &[C64],
        policy: LPolicy,
        m_list: Vec<u64>,
    ) -> Result<Self> {
        let a = vander::weights_f64(&exact::elimination_weights_for(&m_list)?);
        Self::build_with_weights(schemes, z.len(), d, z, policy, m_list, a)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        schemes: Vec<NodeScheme>,
        n: usize,
        d: u32,
        target: Vec<C64>,
        l: f64,
        l_policy: LPolicy,
        m_list: Vec<u64>,
        a_list: Vec<f64>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("degree bound must be at least 1"));
        }
        if m_list.is_empty() || m_list.len() != a_list.len() || m_list.contains(&0) {
            return Err(Error::invalid("m and a lists must be non-empty, equally long and positive"));
        }
        check_layout(&schemes, n)?;
        let big_d = 4.0 * l + 1.0;
        let r = build_r(big_d, l)?;
        let targets = unit_targets(&schemes, &target)?;
        let mut units = Vec::with_capacity(schemes.len());
        let mut start = 0;
        for (scheme, t) in schemes.iter().zip(targets) {
            let width = scheme.width().min(n - start);
            let c = scheme.solve(&t)?;
            let sp = split(&c, l)?;
            let w = build_w(&sp)?;
            let points = (0..scheme.len())
                .map(|i| scheme.point(i)[..width].to_vec())
                .collect();
            units.push(Unit { start, width, points, split: sp, w });
            start += scheme.width();
        }
        Ok(InterpolationPlan {
            n,
            d,
            m_list,
            a_list,
            l,
            big_d,
            l_policy,
            schemes,
            target,
            budget: DEFAULT_BUDGET,
            units,
            r,
        })
    }

    /// Copy with different affine weights (for diagnostics).
    pub fn with_weights(&self, a_list: Vec<f64>) -> Result<Self> {
        if a_list.len() != self.m_list.len() {
            return Err(Error::DimensionMismatch { expected: self.m_list.len(), found: a_list.len() });
        }
        Ok(InterpolationPlan { a_list, ..self.clone() })
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn m_list(&self) -> &[u64] {
        &self.m_list
    }

    pub fn a_list(&self) -> &[f64] {
        &self.a_list
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// `D = 4L + 1`.
    pub fn big_d(&self) -> f64 {
        self.big_d
    }

    pub fn l_policy(&self) -> LPolicy {
        self.l_policy
    }

    pub fn schemes(&self) -> &[NodeScheme] {
        &self.schemes
    }

    pub fn target(&self) -> &[C64] {
        &self.target
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn r(&self) -> &PiecewiseMap<Sign> {
        &self.r
    }

    /// `Σ_j |a_j| D^{m_j}`, the bound on `Σ_ξ |c_ξ|`.
    pub fn l1_bound(&self) -> f64 {
        self.a_list
            .iter()
            .zip(&self.m_list)
            .map(|(a, &m)| a.abs() * self.big_d.powi(m as i32))
            .sum()
    }

    /// Number of grid points `∏_u N_u`.
    pub fn grid_size(&self) -> f64 {
        self.units.iter().map(|u| u.points.len() as f64).product()
    }

    /// Total number of pieces over all `w` maps and `r`.
    pub fn total_pieces(&self) -> usize {
        self.r.pieces().len() + self.units.iter().map(|u| u.w.pieces().len()).sum::<usize>()
    }
}

fn check_layout(schemes: &[NodeScheme], n: usize) -> Result<()> {
    if n == 0 || schemes.is_empty() {
        return Err(Error::invalid("a plan needs at least one coordinate"));
    }
    if schemes.len() > 63 {
        return Err(Error::invalid("at most 63 units are supported"));
    }
    let total: usize = schemes.iter().map(NodeScheme::width).sum();
    let last = schemes.last().map_or(0, NodeScheme::width);
    if total < n || total - last >= n {
        return Err(Error::invalid(format!(
            "schemes cover {total} coordinates, which does not fit n = {n}"
        )));
    }
    Ok(())
}

/// Per-unit targets; coordinates past `n` are padded with 0.
fn unit_targets(schemes: &[NodeScheme], z: &[C64]) -> Result<Vec<Vec<C64>>> {
    for (j, v) in z.iter().enumerate() {
        if !(v.norm() <= 1.0 + 1e-12) {
            return Err(Error::invalid(format!("target coordinate {j} = {v} lies outside the closed disc")));
        }
    }
    let mut out = Vec::with_capacity(schemes.len());
    let mut start = 0;
    for s in schemes {
        out.push(
            (start..start + s.width())
                .map(|j| z.get(j).copied().unwrap_or_default())
                .collect(),
        );
        start += s.width();
    }
    Ok(out)
}
