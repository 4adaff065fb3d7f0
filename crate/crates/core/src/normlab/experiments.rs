//! Experiment drivers. Each returns an [`ExperimentReport`] whose assertions
//! compare measured lower bounds against computable right-hand sides.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    coords_of, grid_l, lp_norm, parseval_norm, quadrature_size, sup_grid, sup_torus_default,
    BoundConstants, Domain, Exponent, ExperimentReport, GridSpec,
};
use crate::cplx::{root_of_unity, ReIm};
use crate::interp::partition::{block_count, enumerate_induced, induce_probability, set_partitions};
use crate::interp::table::reproduction_basis;
use crate::interp::{coefficients, residual_curve, InterpolationPlan};
use crate::linalg;
use crate::par;
use crate::poly::{admissible_monomials, random_disc_point, random_polynomial, random_real_polynomial, Polynomial};
use crate::scheme::{build_r, build_w, moment, resolve_l, split, LPolicy, NodeScheme};
use crate::smallset::{self, SearchConfig};
use crate::vander::{self, exact, NodeVector};
use crate::{Error, Result, C64};

/// Random admissible polynomials, one RNG stream per instance so ensembles
/// do not depend on evaluation order.
pub fn ensemble(n: usize, d: u32, k: u32, count: usize, seed: u64, real: bool) -> Result<Vec<Polynomial>> {
    let pool = admissible_monomials(n, d, k).len();
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let support = rng.gen_range(1..=pool.min(12));
            if real {
                random_real_polynomial(&mut rng, n, d, k, support)
            } else {
                random_polynomial(&mut rng, n, d, k, support)
            }
        })
        .collect()
}

fn stats(values: &[f64]) -> serde_json::Value {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    json!({ "count": values.len(), "mean": mean, "min": min, "max": max })
}

/// Settings shared by the ensemble experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub n: usize,
    pub d: u32,
    pub k: usize,
    pub grid: GridSpec,
    pub ensemble: usize,
    pub seed: u64,
    pub l_policy: LPolicy,
}

impl EnsembleConfig {
    fn record(&self, r: &mut ExperimentReport) {
        r.input("n", self.n)
            .input("d", self.d)
            .input("K", self.k)
            .input("grid", self.grid.name())
            .input("ensemble", self.ensemble)
            .input("l_policy", self.l_policy.name());
    }

    fn nodes(&self) -> Result<Vec<NodeVector>> {
        self.grid.nodes(self.n, self.k)
    }
}

fn record_grid(r: &mut ExperimentReport, nodes: &[NodeVector]) {
    let pts: Vec<Vec<ReIm>> = nodes.iter().map(|v| v.nodes().iter().map(|&z| ReIm::from(z)).collect()).collect();
    let eta = nodes.iter().map(NodeVector::eta).fold(f64::INFINITY, f64::min);
    r.input("nodes", pts).input("eta", eta);
}

fn record_constants(r: &mut ExperimentReport, c: &BoundConstants) {
    r.constant("L", c.l)
        .constant("D", c.big_d)
        .constant("m", &c.m)
        .constant("a", &c.a)
        .constant("l1_bound", c.l1_bound);
}

/// `‖f‖_T / ‖f‖_Y` over a random ensemble against `Σ_j |a_j| D^{m_j}`.
/// Returns the report and the ratio of every instance.
pub fn empirical_constant(cfg: &EnsembleConfig) -> Result<(ExperimentReport, Vec<f64>)> {
    let mut r = ExperimentReport::new("constant", cfg.seed);
    cfg.record(&mut r);
    let nodes = cfg.nodes()?;
    record_grid(&mut r, &nodes);
    let consts = BoundConstants::new(cfg.d, grid_l(&nodes, cfg.l_policy)?)?;
    record_constants(&mut r, &consts);
    let coords = coords_of(&nodes);
    let fs = ensemble(cfg.n, cfg.d, cfg.k as u32, cfg.ensemble, cfg.seed, false)?;
    let ratios = par::map_slice(&fs, |f| -> Result<f64> {
        Ok(sup_torus_default(f)?.value / sup_grid(f, &coords)?.value)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    r.measure("ratio", stats(&ratios));
    // ‖c‖_1 over circle targets, against log K
    let mut b_hat: f64 = 0.0;
    for v in &nodes {
        let mut worst: f64 = 0.0;
        for j in 0..super::CIRCLE_SAMPLES {
            let x = root_of_unity(j, super::CIRCLE_SAMPLES);
            worst = worst.max(vander::solve_moments(v, x)?.l1);
        }
        if v.len() >= 2 {
            b_hat = b_hat.max(worst / (v.len() as f64).ln());
        }
    }
    r.measure("empirical_log_k_factor", b_hat);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    r.assert_le("ratio_within_bound", max_ratio, consts.l1_bound);
    r.finish();
    Ok((r, ratios))
}

/// Least-squares line `y = c1 x + c2` with its `R²`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let design: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 1.0]).collect();
    let rhs: Vec<C64> = ys.iter().map(|&y| C64::new(y, 0.0)).collect();
    let sol = linalg::least_squares(&design, &rhs)?;
    let (c1, c2) = (sol[0].re, sol[1].re);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c1 * x - c2).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((c1, c2, r2))
}

/// Bound `Σ_j |a_j| D^{m_j}` on `Ω_K` under the log-K policy, fitted by
/// `(c₁ log K + c₂)^{2d}` per `d`.
pub fn constant_envelope(ks: &[usize], ds: &[u32]) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("constant-envelope", 0);
    r.input("K", ks).input("d", ds).input("l_policy", LPolicy::LogK.name());
    for &d in ds {
        let mut xs = Vec::with_capacity(ks.len());
        let mut ys = Vec::with_capacity(ks.len());
        let mut bounds = Vec::with_capacity(ks.len());
        for &k in ks {
            let c = BoundConstants::new(d, vander::omega_l1_bound(k))?;
            xs.push((k as f64).ln());
            ys.push(c.l1_bound.powf(1.0 / (2.0 * d as f64)));
            bounds.push(c.l1_bound);
        }
        let (c1, c2, r2) = fit_line(&xs, &ys)?;
        let shift = xs.iter().zip(&ys).map(|(x, y)| y - c1 * x - c2).fold(0.0, f64::max);
        let c2_env = c2 + shift;
        let worst = xs
            .iter()
            .zip(&bounds)
            .map(|(x, b)| b / (c1 * x + c2_env).powi(2 * d as i32))
            .fold(0.0, f64::max);
        r.measure(
            &format!("d{d}"),
            json!({ "bounds": bounds, "c1": c1, "c2": c2, "c2_envelope": c2_env, "r2": r2 }),
        );
        r.assert_le(&format!("d{d}.r2_at_least_0.95"), 0.95, r2);
        r.assert_le(&format!("d{d}.bounds_inside_envelope"), worst, 1.0 + 1e-12);
    }
    r.finish();
    Ok(r)
}

/// `‖f_ℓ‖_Y ≤ C ‖f‖_Y` for the degree-`ℓ` homogeneous part.
pub fn homogeneous_part_check(f: &Polynomial, ell: u32, coords: &[Vec<C64>], consts: &BoundConstants) -> Result<(f64, f64)> {
    let part = f.homogeneous_part(ell)?;
    let lhs = sup_grid(&part, coords)?.value;
    let rhs = consts.l1_bound * sup_grid(f, coords)?.value;
    Ok((lhs, rhs))
}

/// Homogeneous-part check over an ensemble, every `ℓ ≤ d`.
pub fn homogeneous_part_ensemble(cfg: &EnsembleConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("homogeneous-part", cfg.seed);
    cfg.record(&mut r);
    let nodes = cfg.nodes()?;
    let consts = BoundConstants::new(cfg.d, grid_l(&nodes, cfg.l_policy)?)?;
    record_constants(&mut r, &consts);
    let coords = coords_of(&nodes);
    let mut worst: f64 = 0.0;
    for f in ensemble(cfg.n, cfg.d, cfg.k as u32, cfg.ensemble, cfg.seed, false)? {
        for ell in 0..=cfg.d {
            let (lhs, rhs) = homogeneous_part_check(&f, ell, &coords, &consts)?;
            worst = worst.max(lhs / rhs);
        }
    }
    r.measure("worst_fraction_of_bound", worst);
    r.assert_le("homogeneous_part_within_bound", worst, 1.0);
    r.finish();
    Ok(r)
}

/// Quantities of the coefficient-norm quotient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientQuotient {
    /// `(Σ |f̂(α)|^{2d/(d+1)})^{(d+1)/(2d)}`.
    pub coefficient_norm: f64,
    pub grid_sup: f64,
    pub torus_sup: f64,
    /// `coefficient_norm / grid_sup`.
    pub quotient: f64,
    /// `coefficient_norm / torus_sup`.
    pub torus_quotient: f64,
    /// `torus_sup / grid_sup`.
    pub discretization: f64,
}

pub fn coefficient_quotient(f: &Polynomial, coords: &[Vec<C64>], d: u32) -> Result<CoefficientQuotient> {
    let q = 2.0 * d as f64 / (d as f64 + 1.0);
    let coefficient_norm = f.coefficient_norm(q);
    let grid_sup = sup_grid(f, coords)?.value;
    let torus_sup = sup_torus_default(f)?.value;
    Ok(CoefficientQuotient {
        coefficient_norm,
        grid_sup,
        torus_sup,
        quotient: coefficient_norm / grid_sup,
        torus_quotient: coefficient_norm / torus_sup,
        discretization: torus_sup / grid_sup,
    })
}

pub fn coefficient_quotient_ensemble(cfg: &EnsembleConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("coefficient-quotient", cfg.seed);
    cfg.record(&mut r);
    let nodes = cfg.nodes()?;
    let consts = BoundConstants::new(cfg.d, grid_l(&nodes, cfg.l_policy)?)?;
    record_constants(&mut r, &consts);
    let coords = coords_of(&nodes);
    let fs = ensemble(cfg.n, cfg.d, cfg.k as u32, cfg.ensemble, cfg.seed, false)?;
    let qs = par::map_slice(&fs, |f| coefficient_quotient(f, &coords, cfg.d))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let chain = qs
        .iter()
        .map(|q| q.quotient / (q.torus_quotient * q.discretization))
        .fold(0.0, f64::max);
    let disc = qs.iter().map(|q| q.discretization).fold(0.0, f64::max);
    r.measure("quotient", stats(&qs.iter().map(|q| q.quotient).collect::<Vec<_>>()));
    r.measure("torus_quotient", stats(&qs.iter().map(|q| q.torus_quotient).collect::<Vec<_>>()));
    r.assert_le("factorization", chain, 1.0 + 1e-12);
    r.assert_le("discretization_within_bound", disc, consts.l1_bound);
    r.finish();
    Ok(r)
}

/// Points per coordinate of the dense box scan.
pub fn box_samples(n: usize) -> usize {
    match n {
        1 => 20_001,
        2 => 401,
        3 => 65,
        _ => 17,
    }
}

/// `‖f‖_{[−1,1]^n}` (sampled, a lower bound) over `‖f‖_{G_K^n}`.
pub fn real_grid_ratio(f: &Polynomial, k: usize) -> Result<(f64, f64)> {
    let grid = vec![NodeVector::equispaced(k)?.nodes().to_vec(); f.n()];
    let s = box_samples(f.n());
    let dense: Vec<C64> = (0..s).map(|i| C64::new(-1.0 + 2.0 * i as f64 / (s - 1) as f64, 0.0)).collect();
    let box_sup = sup_grid(f, &vec![dense; f.n()])?.value;
    Ok((box_sup, sup_grid(f, &grid)?.value))
}

pub fn real_grid_ensemble(cfg: &EnsembleConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("real-grid", cfg.seed);
    cfg.record(&mut r);
    let nodes = GridSpec::Equispaced.nodes(cfg.n, cfg.k)?;
    let consts = BoundConstants::new(cfg.d, grid_l(&nodes, cfg.l_policy)?)?;
    record_constants(&mut r, &consts);
    let fs = ensemble(cfg.n, cfg.d, cfg.k as u32, cfg.ensemble, cfg.seed, true)?;
    let ratios = par::map_slice(&fs, |f| real_grid_ratio(f, cfg.k).map(|(b, g)| b / g))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    r.measure("ratio", stats(&ratios));
    r.assert_le("box_over_grid_within_bound", ratios.iter().copied().fold(0.0, f64::max), consts.l1_bound);
    r.finish();
    Ok(r)
}

/// `L^p` transfer from `Ω_K^n` to the torus against
/// `d^{(p−1)/p} (Σ_j |a_j D^{m_j}|^p)^{1/p}`.
pub fn lp_transfer(cfg: &EnsembleConfig, p: u32) -> Result<(ExperimentReport, Vec<f64>)> {
    let mut r = ExperimentReport::new("lp", cfg.seed);
    cfg.record(&mut r);
    r.input("p", p);
    let nodes = GridSpec::Omega.nodes(cfg.n, cfg.k)?;
    let consts = BoundConstants::new(cfg.d, grid_l(&nodes, cfg.l_policy)?)?;
    record_constants(&mut r, &consts);
    let bound = consts.lp_bound(p);
    r.constant("lp_bound", bound).constant("quadrature_size", quadrature_size(p, cfg.k as u32));
    let grid = Domain::Grid(coords_of(&nodes));
    let fs = ensemble(cfg.n, cfg.d, cfg.k as u32, cfg.ensemble, cfg.seed, false)?;
    let rows = par::map_slice(&fs, |f| -> Result<(f64, f64)> {
        let torus = lp_norm(f, Exponent::Even(p), &Domain::Torus)?.value;
        let on_grid = lp_norm(f, Exponent::Even(p), &grid)?.value;
        let parseval = if p == 2 { (torus - parseval_norm(f)).abs() } else { 0.0 };
        Ok((torus / on_grid, parseval))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = rows.iter().map(|x| x.0).collect();
    r.measure("ratio", stats(&ratios));
    r.assert_le("ratio_within_bound", ratios.iter().copied().fold(0.0, f64::max), bound);
    if p == 2 {
        let dev = rows.iter().map(|x| x.1).fold(0.0, f64::max);
        r.assert_le("parseval", dev, 1e-10);
    }
    r.finish();
    Ok((r, ratios))
}

/// `Ω_K` with `ω` moved to angle `ε` next to `1`, and
/// `f = ∏_{ζ ≠ e^{iε}} (z_1 − ζ)`.
pub fn degenerate_instance(k: usize, eps: f64, n: usize) -> Result<(Vec<C64>, Polynomial)> {
    if k < 2 || !(eps > 0.0 && eps < std::f64::consts::PI / k as f64) {
        return Err(Error::invalid("need K ≥ 2 and 0 < ε < π/K"));
    }
    let mut z: Vec<C64> = (0..k).map(|j| root_of_unity(j, k)).collect();
    z[1] = C64::from_polar(1.0, eps);
    let roots: Vec<C64> = z.iter().enumerate().filter(|(j, _)| *j != 1).map(|(_, &v)| v).collect();
    // coefficients of ∏ (t − ζ), lowest degree first
    let mut coef = vec![C64::new(1.0, 0.0)];
    for &zeta in &roots {
        let mut next = vec![C64::new(0.0, 0.0); coef.len() + 1];
        for (i, &c) in coef.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * zeta;
        }
        coef = next;
    }
    let terms = coef.into_iter().enumerate().map(|(e, c)| {
        let mut alpha = vec![0u32; n];
        alpha[0] = e as u32;
        (alpha, c)
    });
    let f = Polynomial::from_terms(n, (k - 1) as u32, k as u32, terms)?;
    Ok((z, f))
}

/// One row of the degeneracy demo.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyRow {
    pub eps: f64,
    pub grid_sup: f64,
    /// `ε 2^{K−2}`.
    pub grid_bound: f64,
    pub torus_lower: f64,
    /// `1 / (ε 2^{K−2})`.
    pub ratio_lower_bound: f64,
    /// `torus_lower / grid_sup`.
    pub certified_ratio: f64,
}

pub fn degeneracy_demo(k: usize, eps_list: &[f64], n: usize) -> Result<(ExperimentReport, Vec<DegeneracyRow>)> {
    let mut r = ExperimentReport::new("demo", 0);
    r.input("K", k).input("eps", eps_list).input("n", n);
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let (z, f) = degenerate_instance(k, eps, n)?;
        let grid_sup = sup_grid(&f, &vec![z; n])?.value;
        let coef_max = f.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        let torus_lower = coef_max.max(sup_torus_default(&f)?.value);
        let grid_bound = eps * 2f64.powi(k as i32 - 2);
        rows.push(DegeneracyRow {
            eps,
            grid_sup,
            grid_bound,
            torus_lower,
            ratio_lower_bound: 1.0 / grid_bound,
            certified_ratio: torus_lower / grid_sup,
        });
        r.assert_le(&format!("eps={eps:e}.grid_sup_small"), grid_sup, grid_bound);
        r.assert_le(&format!("eps={eps:e}.torus_at_least_one"), 1.0, torus_lower);
        r.assert_le(
            &format!("eps={eps:e}.certified_exceeds_bound"),
            1.0 / grid_bound,
            torus_lower / grid_sup,
        );
    }
    let mut growth = Vec::new();
    for w in rows.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (b.eps * 2.0 - a.eps).abs() <= 1e-15 * a.eps {
            r.assert_close(
                &format!("eps={:e}.bound_doubles", b.eps),
                b.ratio_lower_bound / a.ratio_lower_bound,
                2.0,
                1e-12,
            );
            growth.push(b.certified_ratio / a.certified_ratio);
        }
    }
    r.measure("certified_growth", growth);
    r.measure("rows", &rows);
    r.finish();
    Ok((r, rows))
}

/// How the probe visits sign vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeMode {
    Exhaustive,
    Random { samples: usize },
}

/// Outcome of the sign-vector probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// `min_ε max_v |Σ_j v_j ε_j| / (2n)`.
    pub delta_hat: f64,
    /// `1 / (2 δ̂)`; infinite when some `ε` annihilates every point.
    pub c_hat: f64,
    /// `(1/4) e^{δ̂² n / 2}`.
    pub size_floor: f64,
    pub argmin: Vec<i8>,
    pub visited: u64,
}

fn signs(bits: u64, n: usize) -> Vec<i8> {
    (0..n).map(|j| if bits >> j & 1 == 1 { -1 } else { 1 }).collect()
}

/// `max_v |Σ_j v_j ε_j|`, always summed in coordinate order.
fn sign_value(points: &[Vec<C64>], bits: u64) -> f64 {
    points
        .iter()
        .map(|v| {
            let mut s = C64::new(0.0, 0.0);
            for (j, y) in v.iter().enumerate() {
                if bits >> j & 1 == 1 {
                    s -= y;
                } else {
                    s += y;
                }
            }
            s.norm()
        })
        .fold(0.0, f64::max)
}

fn probe_result(n: usize, best: (f64, u64), visited: u64) -> ProbeResult {
    let delta_hat = best.0 / (2.0 * n as f64);
    ProbeResult {
        delta_hat,
        c_hat: if delta_hat > 0.0 { 1.0 / (2.0 * delta_hat) } else { f64::INFINITY },
        size_floor: 0.25 * (delta_hat * delta_hat * n as f64 / 2.0).exp(),
        argmin: signs(best.1, n),
        visited,
    }
}

fn min_pair(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn check_points(points: &[Vec<C64>]) -> Result<usize> {
    let n = points.first().map_or(0, Vec::len);
    if n == 0 || points.iter().any(|p| p.len() != n) {
        return Err(Error::invalid("probe points must share a positive dimension"));
    }
    Ok(n)
}

/// Sign vectors in lexicographic order (or random samples).
pub fn lower_bound_probe(points: &[Vec<C64>], mode: ProbeMode, seed: u64) -> Result<ProbeResult> {
    let n = check_points(points)?;
    match mode {
        ProbeMode::Exhaustive => {
            if n > 20 {
                return Err(Error::Budget { estimated: 2f64.powi(n as i32), limit: 2f64.powi(20) });
            }
            let total = 1usize << n;
            let ranges = par::chunk_ranges(total, 64);
            let best = par::map_slice(&ranges, |range| {
                range
                    .clone()
                    .map(|b| (sign_value(points, b as u64), b as u64))
                    .fold((f64::INFINITY, u64::MAX), min_pair)
            })
            .into_iter()
            .fold((f64::INFINITY, u64::MAX), min_pair);
            Ok(probe_result(n, best, total as u64))
        }
        ProbeMode::Random { samples } => {
            if n > 63 {
                return Err(Error::invalid("random probes support at most 63 coordinates"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            let draws: Vec<u64> = (0..samples.max(1)).map(|_| rng.gen::<u64>() & mask).collect();
            let best = par::map_slice(&draws, |&b| (sign_value(points, b), b))
                .into_iter()
                .fold((f64::INFINITY, u64::MAX), min_pair);
            Ok(probe_result(n, best, draws.len() as u64))
        }
    }
}

/// Second exhaustive enumeration in reflected Gray-code order.
pub fn lower_bound_probe_gray(points: &[Vec<C64>]) -> Result<ProbeResult> {
    let n = check_points(points)?;
    if n > 20 {
        return Err(Error::Budget { estimated: 2f64.powi(n as i32), limit: 2f64.powi(20) });
    }
    let total = 1u64 << n;
    let mut best = (f64::INFINITY, u64::MAX);
    for i in 0..total {
        let g = i ^ (i >> 1);
        best = min_pair(best, (sign_value(points, g), g));
    }
    Ok(probe_result(n, best, total))
}

/// `{±1}^n` as complex points.
pub fn hypercube(n: usize) -> Vec<Vec<C64>> {
    (0..1u64 << n)
        .map(|b| signs(b, n).into_iter().map(|s| C64::new(f64::from(s), 0.0)).collect())
        .collect()
}

pub fn random_points(count: usize, n: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| random_disc_point(&mut rng)).collect()).collect()
}

/// Probe report with both enumerations when exhaustive.
pub fn probe_report(points: &[Vec<C64>], mode: ProbeMode, seed: u64, label: &str) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("probe", seed);
    r.input("points", label).input("size", points.len()).input("n", check_points(points)?);
    let res = lower_bound_probe(points, mode, seed)?;
    if mode == ProbeMode::Exhaustive {
        let gray = lower_bound_probe_gray(points)?;
        r.assert_close("enumerations_agree", res.delta_hat, gray.delta_hat, 0.0);
        r.measure("gray", &gray);
    }
    r.measure("result", &res);
    r.finish();
    Ok(r)
}

/// Settings of the small-set pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallSetConfig {
    pub n: usize,
    pub k: usize,
    pub kk: usize,
    pub d: u32,
    pub seed: u64,
    pub mc_samples: usize,
    pub targets: usize,
    pub l_policy: LPolicy,
    pub budget: f64,
}

/// Block search, cardinality, determinant checks and block-mode
/// reproduction on random targets.
pub fn smallset_experiment(cfg: &SmallSetConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("smallset", cfg.seed);
    r.input("n", cfg.n)
        .input("k", cfg.k)
        .input("K", cfg.kk)
        .input("d", cfg.d)
        .input("mc_samples", cfg.mc_samples)
        .input("l_policy", cfg.l_policy.name());
    let lambda = smallset::lambda_set(cfg.k, cfg.d, cfg.kk as u32)?;
    let coords: Vec<NodeVector> = (0..cfg.k).map(|_| NodeVector::roots_of_unity(cfg.kk)).collect::<Result<_>>()?;
    let design = smallset::search_block(&coords, &lambda, SearchConfig { seed: cfg.seed, ..SearchConfig::default() })?;
    let blocks = cfg.n.div_ceil(cfg.k);
    let points = smallset::assemble(&vec![design.clone(); blocks], cfg.n)?;
    let grid_size = (cfg.kk as f64).powi(cfg.n as i32);
    r.measure("design", &design).measure("set_size", points.len()).measure("grid_size", grid_size);
    r.measure("points", smallset::points_json(&points));
    r.assert_le("smaller_than_grid", points.len() as f64, grid_size);
    r.assert_le("det_nonzero", 0.0, design.det.norm());
    r.assert_le("hadamard", design.det.norm(), smallset::hadamard_bound(design.m) * (1.0 + 1e-9));
    r.measure("below_threshold", design.below_threshold);
    if cfg.mc_samples > 1 {
        let mc = smallset::det_second_moment(&lambda, cfg.mc_samples, cfg.seed)?;
        r.measure("det_second_moment", &mc);
        r.assert_le("second_moment_within_3_sigma", mc.z_score(), 3.0);
    }
    let schemes = smallset::block_schemes(&design, cfg.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    let mut l1_ok = true;
    for _ in 0..cfg.targets {
        let z: Vec<C64> = (0..cfg.n).map(|_| random_disc_point(&mut rng)).collect();
        let plan = InterpolationPlan::build_blocks(schemes.clone(), cfg.d, &z, cfg.l_policy)?.with_budget(cfg.budget);
        let t = coefficients(&plan)?;
        worst = worst.max(t.reproduction_residual(&reproduction_basis(&plan)));
        l1_ok &= t.l1 <= plan.l1_bound() * (1.0 + 1e-6);
    }
    r.assert_le("block_reproduction", worst, 1e-8);
    r.assert_true("block_l1_within_bound", l1_ok);
    r.finish();
    Ok(r)
}

/// Settings of the invariant suite.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub n: usize,
    pub k: usize,
    pub d: u32,
    pub grid: GridSpec,
    pub seed: u64,
    pub l_policy: LPolicy,
    pub targets: usize,
    /// Added to the first elimination weight; nonzero only to exercise
    /// failure paths.
    pub a0_shift: f64,
    pub budget: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n: 3,
            k: 3,
            d: 2,
            grid: GridSpec::Omega,
            seed: 1,
            l_policy: LPolicy::PerRun,
            targets: 3,
            a0_shift: 0.0,
            budget: crate::interp::DEFAULT_BUDGET,
        }
    }
}

/// Random node set with separation at least `eta`.
pub fn random_nodes<R: Rng>(rng: &mut R, k: usize, eta: f64) -> NodeVector {
    loop {
        let pts: Vec<C64> = (0..k).map(|_| random_disc_point(rng)).collect();
        if let Ok(v) = NodeVector::new(pts) {
            if v.eta() >= eta {
                return v;
            }
        }
    }
}

/// Worst errors of `E[r(U) w(U)^α] = x^α / D` and `E[r(U)] = 1/D`.
pub fn moment_identities(count: usize, max_k: usize, eta: f64, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_alpha: f64 = 0.0;
    let mut worst_r: f64 = 0.0;
    for _ in 0..count {
        let k = rng.gen_range(2..=max_k);
        let nodes = random_nodes(&mut rng, k, eta);
        let x = random_disc_point(&mut rng);
        let alpha = rng.gen_range(0..k as u32);
        let scheme = NodeScheme::coordinate(nodes.clone());
        let l = resolve_l(LPolicy::PerRun, &[(&scheme, vec![x])])?;
        let c = vander::solve_moments(&nodes, x)?.c;
        let sp = split(&c, l)?;
        let w = build_w(&sp)?;
        let r = build_r(4.0 * l + 1.0, l)?;
        let big_d = r.d();
        let got = moment(&r, &w, nodes.nodes(), alpha)?;
        worst_alpha = worst_alpha.max((got - crate::cplx::powi(x, alpha) / big_d).norm());
        let e_r = moment(&r, &w, nodes.nodes(), 0)?;
        worst_r = worst_r.max((e_r - 1.0 / big_d).norm());
    }
    Ok((worst_alpha, worst_r))
}

/// Whether enumerated induced-partition frequencies equal the closed form
/// exactly, for every `n, m ≤ max` and support size `≤ max_support`.
pub fn partition_probabilities(max: usize, max_support: usize) -> bool {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    for n in 1..=max {
        for m in 1..=max {
            for s in 1..=n.min(max_support) {
                let support: Vec<usize> = (n - s..n).collect();
                let counts = enumerate_induced(n, m, &support);
                let total = BigRational::from_integer(BigInt::from(m).pow(n as u32));
                for rgs in set_partitions(s) {
                    let got = BigRational::from_integer(BigInt::from(counts.get(&rgs).copied().unwrap_or(0)))
                        / total.clone();
                    if got != induce_probability(m as u64, s, block_count(&rgs)) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// The full invariant suite: moment identities, partition probabilities,
/// reproduction on the monomial basis, residual curves and elimination
/// weights.
pub fn verify_suite(cfg: &VerifyConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("verify", cfg.seed);
    r.input("n", cfg.n)
        .input("K", cfg.k)
        .input("d", cfg.d)
        .input("grid", cfg.grid.name())
        .input("l_policy", cfg.l_policy.name())
        .input("targets", cfg.targets)
        .input("a0_shift", cfg.a0_shift);

    let (wa, wr) = moment_identities(200, 8, 0.2, cfg.seed)?;
    r.assert_le("moment.alpha", wa, 1e-10);
    r.assert_le("moment.r", wr, 1e-12);
    r.assert_true("partition_probabilities", partition_probabilities(4, 4));

    let weights = exact::elimination_weights(cfg.d)?;
    let one = exact::abs_sum(&weights);
    r.constant("a_exact", weights.iter().map(|w| w.to_string()).collect::<Vec<_>>());
    r.constant("a_abs_sum", vander::weights_f64(&[one])[0]);

    let nodes = cfg.grid.nodes(cfg.n, cfg.k)?;
    let schemes: Vec<NodeScheme> = nodes.iter().cloned().map(NodeScheme::coordinate).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst_rep: f64 = 0.0;
    let mut worst_l1: f64 = 0.0;
    let mut worst_extrap: f64 = 0.0;
    let mut worst_affine: f64 = 0.0;
    let mut constants = Vec::new();
    for _ in 0..cfg.targets {
        let z: Vec<C64> = (0..cfg.n).map(|_| random_disc_point(&mut rng)).collect();
        let mut plan = InterpolationPlan::build(schemes.clone(), cfg.d, &z, cfg.l_policy)?.with_budget(cfg.budget);
        if cfg.a0_shift != 0.0 {
            let mut a = plan.a_list().to_vec();
            a[0] += cfg.a0_shift;
            plan = plan.with_weights(a)?.with_budget(cfg.budget);
        }
        let t = coefficients(&plan)?;
        worst_rep = worst_rep.max(t.reproduction_residual(&reproduction_basis(&plan)));
        worst_l1 = worst_l1.max(t.l1 / plan.l1_bound());
        constants.push(json!({ "L": plan.l(), "D": plan.big_d(), "l1_bound": plan.l1_bound(), "l1": t.l1 }));
        if cfg.d >= 2 {
            let f = random_polynomial(&mut rng, cfg.n, cfg.d, cfg.k as u32, admissible_monomials(cfg.n, cfg.d, cfg.k as u32).len().min(6))?;
            let m_range: Vec<u64> = (cfg.d as u64..=cfg.d as u64 + 6).collect();
            let curve = residual_curve(&plan, &f, &m_range)?;
            worst_extrap = worst_extrap.max(curve.extrapolation_error);
            worst_affine = worst_affine.max(curve.affine_residual);
        }
    }
    r.constant("plans", constants);
    r.assert_le("reproduction", worst_rep, 1e-9);
    r.assert_le("coefficient_l1_within_bound", worst_l1, 1.0 + 1e-6);
    if cfg.d >= 2 {
        r.assert_le("residual_curve.extrapolation", worst_extrap, 1e-8);
        r.assert_le("residual_curve.affine", worst_affine, 1e-10);
    }
    r.finish();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, d: u32, k: usize) -> EnsembleConfig {
        EnsembleConfig { n, d, k, grid: GridSpec::Omega, ensemble: 8, seed: 3, l_policy: LPolicy::PerRun }
    }

    #[test]
    fn constant_ratios_within_bound() {
        let (r, ratios) = empirical_constant(&cfg(2, 2, 3)).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        assert_eq!(ratios.len(), 8);
        assert!(ratios.iter().all(|&x| x >= 1.0 - 1e-12));
    }

    #[test]
    fn degree_one_bound_is_big_d() {
        let (r, _) = empirical_constant(&cfg(2, 1, 2)).unwrap();
        assert_eq!(r.constants["l1_bound"], r.constants["D"]);
    }

    #[test]
    fn homogeneous_part_example() {
        let one = C64::new(1.0, 0.0);
        let f = Polynomial::from_terms(2, 2, 3, [(vec![0, 0], one), (vec![1, 1], one)]).unwrap();
        let grid = coords_of(&GridSpec::Omega.nodes(2, 3).unwrap());
        let consts = BoundConstants::new(2, 2.0).unwrap();
        let (lhs, rhs) = homogeneous_part_check(&f, 2, &grid, &consts).unwrap();
        assert!(lhs <= rhs);
        let (lhs, _) = homogeneous_part_check(&f, 1, &grid, &consts).unwrap();
        assert_eq!(lhs, 0.0);
        assert!(homogeneous_part_ensemble(&cfg(2, 2, 3)).unwrap().passed());
    }

    #[test]
    fn coefficient_quotient_examples() {
        let one = C64::new(1.0, 0.0);
        let grid = coords_of(&GridSpec::Omega.nodes(2, 2).unwrap());
        let mono = Polynomial::from_terms(2, 1, 2, [(vec![0, 1], one)]).unwrap();
        assert!((coefficient_quotient(&mono, &grid, 1).unwrap().quotient - 1.0).abs() < 1e-12);
        let sum = Polynomial::from_terms(2, 1, 2, [(vec![1, 0], one), (vec![0, 1], one)]).unwrap();
        let q = coefficient_quotient(&sum, &grid, 1).unwrap();
        assert!((q.quotient - 1.0).abs() < 1e-12);
        assert!(coefficient_quotient_ensemble(&cfg(2, 2, 3)).unwrap().passed());
    }

    #[test]
    fn real_grid_examples() {
        // multi-affine: the box max sits on the vertices
        let f = Polynomial::from_terms(
            2,
            2,
            2,
            [(vec![1, 1], C64::new(0.5, 0.0)), (vec![1, 0], C64::new(-0.3, 0.0)), (vec![0, 0], C64::new(0.1, 0.0))],
        )
        .unwrap();
        let (b, g) = real_grid_ratio(&f, 2).unwrap();
        assert!((b - g).abs() < 1e-12);
        let c = Polynomial::constant(2, 1, 2, C64::new(-2.0, 0.0)).unwrap();
        let (b, g) = real_grid_ratio(&c, 3).unwrap();
        assert_eq!(b / g, 1.0);
        assert!(real_grid_ensemble(&EnsembleConfig { l_policy: LPolicy::GlobalBound, ..cfg(2, 2, 3) })
            .unwrap()
            .passed());
    }

    #[test]
    fn lp_transfer_holds() {
        for p in [2, 4] {
            let (r, _) = lp_transfer(&cfg(2, 2, 3), p).unwrap();
            assert!(r.passed(), "{:?}", r.first_failure());
        }
    }

    #[test]
    fn degeneracy_rows() {
        let (r, rows) = degeneracy_demo(3, &[2e-3, 1e-3], 1).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        assert!(rows[1].certified_ratio >= 500.0);
        assert!((rows[1].ratio_lower_bound - 500.0).abs() < 1e-9);
    }

    #[test]
    fn probe_examples() {
        let zero = vec![vec![C64::new(0.0, 0.0); 4]];
        assert!(lower_bound_probe(&zero, ProbeMode::Exhaustive, 0).unwrap().c_hat.is_infinite());
        let cube = hypercube(6);
        let res = lower_bound_probe(&cube, ProbeMode::Exhaustive, 0).unwrap();
        assert_eq!(res.delta_hat, 0.5);
        let pts = random_points(20, 8, 4);
        let a = lower_bound_probe(&pts, ProbeMode::Exhaustive, 0).unwrap();
        let b = lower_bound_probe_gray(&pts).unwrap();
        assert_eq!(a.delta_hat, b.delta_hat);
        let c = lower_bound_probe(&pts, ProbeMode::Random { samples: 300 }, 1).unwrap();
        assert!(c.delta_hat >= a.delta_hat);
    }

    #[test]
    fn verify_passes_and_detects_bad_weights() {
        let good = verify_suite(&VerifyConfig { targets: 1, ..VerifyConfig::default() }).unwrap();
        assert!(good.passed(), "{:?}", good.first_failure());
        let bad = verify_suite(&VerifyConfig { targets: 1, a0_shift: 0.1, ..VerifyConfig::default() }).unwrap();
        assert!(!bad.passed());
    }

    #[test]
    fn envelope_fit() {
        let ks: Vec<usize> = (2..=32).collect();
        let r = constant_envelope(&ks, &[1, 2]).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
    }
}
