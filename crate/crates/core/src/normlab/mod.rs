//! Norm measurements on grids and on the polytorus, plus the experiment
//! drivers built on them.
//!
//! Torus sup norms are only ever certified from below (maxima over nested
//! roots-of-unity grids), so every asserted inequality of the form
//! `‖f‖_T / ‖f‖_Y ≤ bound` is sound.

pub mod experiments;
pub mod report;

use serde::{Deserialize, Serialize};

use crate::cplx::{root_of_unity, ReIm};
use crate::poly::{eval_on_product, Polynomial};
use crate::scheme::{required_l, LPolicy, PER_RUN_HEADROOM};
use crate::vander::{self, NodeVector};
use crate::{Error, Result, C64};

pub use report::{write_ratios_csv, Assertion, ExperimentReport};

/// Largest product set the grid routines will evaluate on.
pub const MAX_GRID_POINTS: f64 = 4e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    ExactGrid,
    RefinedLowerBound,
    Quadrature,
}

/// A measured norm with how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub kind: NormKind,
    /// `(points per coordinate, value found)` per refinement level.
    pub trace: Vec<(usize, f64)>,
}

fn check_grid(coords: &[Vec<C64>]) -> Result<()> {
    let size: f64 = coords.iter().map(|c| c.len() as f64).product();
    Error::check_budget(size, MAX_GRID_POINTS)
}

/// Exact `max |f|` over a product set.
pub fn sup_grid(f: &Polynomial, coords: &[Vec<C64>]) -> Result<NormEstimate> {
    check_grid(coords)?;
    let value = eval_on_product(f, coords)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(NormEstimate {
        value,
        kind: NormKind::ExactGrid,
        trace: vec![(coords.first().map_or(0, Vec::len), value)],
    })
}

fn omega_points(m: usize) -> Vec<C64> {
    (0..m).map(|j| root_of_unity(j, m)).collect()
}

/// Default refinement schedule: start at `max(2K, 4)` points per coordinate
/// and double while the grid stays below `2^16` points (also `2^16` per
/// coordinate in one variable).
pub fn default_levels(n: usize, k: u32) -> Vec<usize> {
    let mut m = (2 * k as usize).max(4);
    let cap = 1usize << 16;
    let mut out = vec![m];
    loop {
        m *= 2;
        let size = (m as f64).powi(n as i32);
        if size > cap as f64 || m > 1 << 16 {
            break;
        }
        out.push(m);
    }
    out
}

/// Lower bound on `‖f‖_{T^n}` from maxima over `Ω_M^n` for each `M` in
/// `levels`. With doubling levels the grids are nested, so the trace is
/// non-decreasing.
pub fn sup_torus(f: &Polynomial, levels: &[usize]) -> Result<NormEstimate> {
    if levels.is_empty() {
        return Err(Error::invalid("empty refinement schedule"));
    }
    let mut trace = Vec::with_capacity(levels.len());
    let mut best: f64 = 0.0;
    for &m in levels {
        let coords = vec![omega_points(m); f.n()];
        best = best.max(sup_grid(f, &coords)?.value);
        trace.push((m, best));
    }
    Ok(NormEstimate { value: best, kind: NormKind::RefinedLowerBound, trace })
}

/// `sup_torus` with [`default_levels`].
pub fn sup_torus_default(f: &Polynomial) -> Result<NormEstimate> {
    sup_torus(f, &default_levels(f.n(), f.k()))
}

/// Exponent of an `L^p` norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exponent {
    Even(u32),
    Infinity,
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" => Ok(Exponent::Infinity),
            other => match other.parse::<u32>() {
                Ok(p) if p > 0 && p % 2 == 0 => Ok(Exponent::Even(p)),
                _ => Err(Error::invalid(format!("p = {other:?} is not an even integer or inf"))),
            },
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Even(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

/// Where a norm is taken.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Torus,
    Grid(Vec<Vec<C64>>),
}

fn mean_power(values: &[C64], p: u32) -> f64 {
    let s = crate::cplx::compensated_sum(values.iter().map(|v| v.norm().powi(p as i32)));
    (s / values.len() as f64).powf(1.0 / p as f64)
}

/// Per-coordinate quadrature size that integrates `|f|^p` exactly.
pub fn quadrature_size(p: u32, k: u32) -> usize {
    (p * (k.max(1) - 1) + 1) as usize
}

/// `L^p` norm under the uniform probability measure.
pub fn lp_norm(f: &Polynomial, p: Exponent, domain: &Domain) -> Result<NormEstimate> {
    match (p, domain) {
        (Exponent::Infinity, Domain::Torus) => sup_torus_default(f),
        (Exponent::Infinity, Domain::Grid(coords)) => sup_grid(f, coords),
        (Exponent::Even(p), Domain::Torus) => {
            let m = quadrature_size(p, f.k());
            lp_torus_with(f, p, m)
        }
        (Exponent::Even(p), Domain::Grid(coords)) => {
            check_grid(coords)?;
            let value = mean_power(&eval_on_product(f, coords)?, p);
            Ok(NormEstimate { value, kind: NormKind::ExactGrid, trace: Vec::new() })
        }
    }
}

/// Trapezoid rule on `Ω_m^n`; exact when `m ≥ p(K−1)/2 + 1`.
pub fn lp_torus_with(f: &Polynomial, p: u32, m: usize) -> Result<NormEstimate> {
    if p == 0 || p % 2 != 0 {
        return Err(Error::invalid(format!("p = {p} must be a positive even integer")));
    }
    let coords = vec![omega_points(m); f.n()];
    check_grid(&coords)?;
    let value = mean_power(&eval_on_product(f, &coords)?, p);
    Ok(NormEstimate { value, kind: NormKind::Quadrature, trace: vec![(m, value)] })
}

/// `(Σ |f̂(α)|²)^{1/2}`.
pub fn parseval_norm(f: &Polynomial) -> f64 {
    f.coefficient_norm(2.0)
}

/// Grid families selectable from the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    /// `K`-th roots of unity.
    Omega,
    /// `K` equispaced points of `[−1, 1]`.
    Equispaced,
    /// One node list per coordinate.
    Custom(Vec<Vec<C64>>),
}

impl GridSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GridSpec::Omega => "omega",
            GridSpec::Equispaced => "equispaced",
            GridSpec::Custom(_) => "custom",
        }
    }

    /// Node sets for `n` coordinates with `K` nodes each.
    pub fn nodes(&self, n: usize, k: usize) -> Result<Vec<NodeVector>> {
        match self {
            GridSpec::Omega => (0..n).map(|_| NodeVector::roots_of_unity(k)).collect(),
            GridSpec::Equispaced => (0..n).map(|_| NodeVector::equispaced(k)).collect(),
            GridSpec::Custom(lists) => {
                if lists.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: lists.len() });
                }
                lists.iter().map(|l| NodeVector::new(l.clone())).collect()
            }
        }
    }
}

impl GridSpec {
    /// Parses `omega`, `equispaced` or `custom:<path>`; custom files hold one
    /// JSON list of `{"re", "im"}` objects per coordinate.
    pub fn parse(spec: &str) -> Result<GridSpec> {
        match spec {
            "omega" => Ok(GridSpec::Omega),
            "equispaced" => Ok(GridSpec::Equispaced),
            other => {
                let path = other
                    .strip_prefix("custom:")
                    .ok_or_else(|| Error::invalid(format!("unknown grid {other:?}")))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::invalid(format!("cannot read {path}: {e}")))?;
                let lists: Vec<Vec<ReIm>> =
                    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("bad grid file: {e}")))?;
                Ok(GridSpec::Custom(
                    lists.into_iter().map(|l| l.into_iter().map(C64::from).collect()).collect(),
                ))
            }
        }
    }
}

/// Plain coordinate lists of node sets.
pub fn coords_of(nodes: &[NodeVector]) -> Vec<Vec<C64>> {
    nodes.iter().map(|v| v.nodes().to_vec()).collect()
}

/// Number of circle points used to resolve the per-run `L` for
/// target-independent constants.
pub const CIRCLE_SAMPLES: usize = 256;

/// Largest split requirement of one node set over the unit circle. The
/// requirement is a maximum of harmonic functions of the target, so the
/// circle carries the maximum over the disc.
pub fn circle_required_l(nodes: &NodeVector) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 0..CIRCLE_SAMPLES {
        let x = root_of_unity(j, CIRCLE_SAMPLES);
        worst = worst.max(required_l(&vander::solve_moments(nodes, x)?.c));
    }
    Ok(worst)
}

/// Target-independent `L` for a grid under a policy.
pub fn grid_l(nodes: &[NodeVector], policy: LPolicy) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for v in nodes {
        let l = match policy {
            LPolicy::PerRun => PER_RUN_HEADROOM * circle_required_l(v)?.min(v.l1_bound()),
            LPolicy::GlobalBound => v.l1_bound(),
            LPolicy::LogK => {
                if !v.is_roots_of_unity() {
                    return Err(Error::invalid("the log-k policy needs roots-of-unity coordinates"));
                }
                vander::omega_l1_bound(v.len())
            }
            LPolicy::Fixed(l) => l,
        };
        worst = worst.max(l);
    }
    Ok(worst)
}

/// Constants of the interpolation formula at degree `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub d: u32,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "D")]
    pub big_d: f64,
    pub m: Vec<u64>,
    pub a: Vec<f64>,
    /// `Σ_j |a_j| D^{m_j}`.
    pub l1_bound: f64,
}

impl BoundConstants {
    pub fn new(d: u32, l: f64) -> Result<Self> {
        let (m, a) = crate::interp::default_weights(d)?;
        let big_d = 4.0 * l + 1.0;
        let l1_bound = m.iter().zip(&a).map(|(&m, a)| a.abs() * big_d.powi(m as i32)).sum();
        Ok(BoundConstants { d, l, big_d, m, a, l1_bound })
    }

    /// `d^{(p−1)/p} (Σ_j |a_j D^{m_j}|^p)^{1/p}`.
    pub fn lp_bound(&self, p: u32) -> f64 {
        let pf = p as f64;
        let s: f64 = self
            .m
            .iter()
            .zip(&self.a)
            .map(|(&m, a)| (a.abs() * self.big_d.powi(m as i32)).powf(pf))
            .sum();
        (self.d as f64).powf((pf - 1.0) / pf) * s.powf(1.0 / pf)
    }
}
