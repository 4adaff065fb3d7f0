//! Small sampling sets built from blocks of `k` coordinates.
//!
//! Each block uses `M = |Λ|` points of a `k`-dimensional product grid chosen
//! so that the generalized Vandermonde matrix `[y_j^β]_{β ∈ Λ}` is well away
//! from singular. The sampling set is the product of the block point lists,
//! `M^{⌈n/k⌉}` points instead of `K^n`.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cplx::ReIm;
use crate::interp::default_weights;
use crate::linalg;
use crate::par;
use crate::poly::{random_disc_point, Monomial};
use crate::scheme::{block_matrix, BlockNodes, NodeScheme};
use crate::vander::{self, NodeVector};
use crate::{Error, Result, C64};

/// `Λ = {α ∈ N^k : |α| ≤ d, α_i ≤ K − 1}` in graded-lex order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub k: usize,
    pub d: u32,
    #[serde(rename = "K")]
    pub kk: u32,
    pub elements: Vec<Vec<u32>>,
}

impl ExponentSet {
    /// Cardinality `M`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `(d + 1) k^d`.
    pub fn size_bound(&self) -> f64 {
        (self.d as f64 + 1.0) * (self.k as f64).powi(self.d as i32)
    }
}

pub fn lambda_set(k: usize, d: u32, kk: u32) -> Result<ExponentSet> {
    if k == 0 || d == 0 || kk < 2 {
        return Err(Error::invalid("need k, d ≥ 1 and K ≥ 2"));
    }
    let elements = crate::poly::admissible_monomials(k, d, kk)
        .into_iter()
        .map(|m| m.exponents().to_vec())
        .collect();
    Ok(ExponentSet { k, d, kk, elements })
}

/// `det [y_j^{β_i}]`, rows indexed by `Λ` and columns by points.
pub fn det_p(points: &[Vec<C64>], lambda: &ExponentSet) -> Result<C64> {
    if points.len() != lambda.len() {
        return Err(Error::DimensionMismatch { expected: lambda.len(), found: points.len() });
    }
    linalg::det(&block_matrix(points, &lambda.elements))
}

/// `M^{M/2}`, the largest possible `|det P|` for unimodular points.
pub fn hadamard_bound(m: usize) -> f64 {
    let mf = m as f64;
    (0.5 * mf * mf.ln()).exp()
}

/// Chosen block points with their determinant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDesign {
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub lambda: Vec<Vec<u32>>,
    #[serde(with = "crate::cplx::vec2")]
    pub nodes: Vec<Vec<C64>>,
    #[serde(rename = "detP", with = "crate::cplx::one")]
    pub det: C64,
    /// `√(M!) / C` with `C` the computable constant at degree `dM`.
    pub threshold: f64,
    /// `log C`, kept in log form since `C` overflows easily.
    pub log_constant: f64,
    pub below_threshold: bool,
    /// Determinant evaluations spent by the search.
    pub evaluations: u64,
}

impl BlockDesign {
    /// The design as a block node scheme.
    pub fn scheme(&self) -> Result<NodeScheme> {
        Ok(NodeScheme::Block(BlockNodes::new(self.nodes.clone(), self.lambda.clone())?))
    }

    /// `M^{M/2} / |det P|`, the Cramer bound on every `|c_j(z)|`.
    pub fn cramer_bound(&self) -> f64 {
        hadamard_bound(self.m) / self.det.norm()
    }

    pub fn hadamard_ok(&self) -> bool {
        self.det.norm() <= hadamard_bound(self.m) * (1.0 + 1e-9)
    }
}

/// Search settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Cap on determinant evaluations over all restarts.
    pub budget: u64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { restarts: 32, budget: 50_000_000, seed: 0 }
    }
}

/// Product grid `Z_1 × … × Z_k` in row-major order.
fn candidate_pool(coords: &[NodeVector]) -> Vec<Vec<C64>> {
    let mut pool: Vec<Vec<C64>> = vec![Vec::new()];
    for z in coords {
        pool = pool
            .into_iter()
            .flat_map(|p| {
                z.nodes().iter().map(move |&y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    pool
}

/// Candidate indices in increasing order and their determinant magnitude.
#[derive(Clone, Debug)]
struct Local {
    picks: Vec<usize>,
    det: f64,
    evaluations: u64,
}

fn abs_det(pool: &[Vec<C64>], picks: &[usize], lambda: &[Vec<u32>]) -> f64 {
    let pts: Vec<Vec<C64>> = picks.iter().map(|&i| pool[i].clone()).collect();
    linalg::det(&block_matrix(&pts, lambda)).map_or(0.0, |d| d.norm())
}

/// Random order, keeping each candidate whose column is independent of
/// those kept so far.
fn random_start(pool: &[Vec<C64>], lambda: &[Vec<u32>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(rng);
    let m = lambda.len();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut picks = Vec::with_capacity(m);
    for idx in order {
        if picks.len() == m {
            break;
        }
        let mut v: Vec<C64> = lambda.iter().map(|b| Monomial::new(b.clone()).eval(&pool[idx])).collect();
        let scale = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for q in &basis {
            let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, a) in v.iter_mut().zip(q) {
                *x -= proj * a;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 * scale.max(1.0) {
            basis.push(v.into_iter().map(|x| x / norm).collect());
            picks.push(idx);
        }
    }
    // a short pool is padded so the swap phase still has M slots
    for idx in 0..pool.len() {
        if picks.len() == m {
            break;
        }
        if !picks.contains(&idx) {
            picks.push(idx);
        }
    }
    picks
}

/// Greedy best single swap until no swap improves `|det P|`.
fn climb(pool: &[Vec<C64>], lambda: &[Vec<u32>], mut picks: Vec<usize>, budget: u64) -> Local {
    picks.sort_unstable();
    let mut det = abs_det(pool, &picks, lambda);
    let mut evaluations = 1u64;
    loop {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for slot in 0..picks.len() {
            for cand in 0..pool.len() {
                if picks.contains(&cand) || evaluations >= budget {
                    continue;
                }
                let mut trial = picks.clone();
                trial[slot] = cand;
                trial.sort_unstable();
                let v = abs_det(pool, &trial, lambda);
                evaluations += 1;
                let better = match &best {
                    None => v > det * (1.0 + 1e-12),
                    Some((bv, bt)) => v > *bv || (v == *bv && trial < *bt),
                };
                if better && v > det * (1.0 + 1e-12) {
                    best = Some((v, trial));
                }
            }
        }
        match best {
            Some((v, t)) => {
                det = v;
                picks = t;
            }
            None => return Local { picks, det, evaluations },
        }
    }
}

/// `log(Σ_j |a_j| D^{m_j})` at degree `d` with `D = 4L + 1`.
pub fn log_interpolation_constant(d: u32, l: f64) -> Result<f64> {
    let (m, a) = default_weights(d)?;
    let big_d = 4.0 * l + 1.0;
    let logs: Vec<f64> = m
        .iter()
        .zip(&a)
        .filter(|(_, a)| **a != 0.0)
        .map(|(&m, a)| a.abs().ln() + m as f64 * big_d.ln())
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(top + logs.iter().map(|x| (x - top).exp()).sum::<f64>().ln())
}

/// `L` for the constant: the roots-of-unity bound where it applies, the
/// general bound otherwise, worst over the block's coordinates.
fn grid_l(coords: &[NodeVector]) -> f64 {
    coords
        .iter()
        .map(|z| {
            if z.is_roots_of_unity() {
                vander::omega_l1_bound(z.len())
            } else {
                z.l1_bound()
            }
        })
        .fold(0.0, f64::max)
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// Searches `(Z_1 × … × Z_k)^M` for points maximizing `|det P|`.
pub fn search_block(coords: &[NodeVector], lambda: &ExponentSet, config: SearchConfig) -> Result<BlockDesign> {
    if coords.len() != lambda.k {
        return Err(Error::DimensionMismatch { expected: lambda.k, found: coords.len() });
    }
    let pool = candidate_pool(coords);
    let m = lambda.len();
    if pool.len() < m {
        return Err(Error::invalid(format!("{} candidates cannot fill {m} slots", pool.len())));
    }
    let restarts = config.restarts.max(1);
    let per_restart = (config.budget / restarts as u64).max(1);
    let locals = par::map_range(restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(r as u64);
        let start = random_start(&pool, &lambda.elements, &mut rng);
        climb(&pool, &lambda.elements, start, per_restart)
    });
    let evaluations = locals.iter().map(|l| l.evaluations).sum();
    let best = locals
        .into_iter()
        .max_by(|a, b| match a.det.partial_cmp(&b.det).unwrap_or(Ordering::Equal) {
            // on equal determinants prefer the smaller tuple
            Ordering::Equal => b.picks.cmp(&a.picks),
            o => o,
        })
        .expect("at least one restart");
    let nodes: Vec<Vec<C64>> = best.picks.iter().map(|&i| pool[i].clone()).collect();
    let det = det_p(&nodes, lambda)?;
    let log_constant = log_interpolation_constant(lambda.d * m as u32, grid_l(coords))?;
    let threshold = (0.5 * ln_factorial(m) - log_constant).exp();
    Ok(BlockDesign {
        k: lambda.k,
        m,
        lambda: lambda.elements.clone(),
        nodes,
        det,
        threshold,
        log_constant,
        below_threshold: !(det.norm() >= threshold),
        evaluations,
    })
}

/// Result of [`choose_k`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KChoice {
    pub k: usize,
    /// `((d + 1) k^d)^{1/k}` at the returned `k`.
    pub growth: f64,
    /// `100 (d/ε) log(d/ε)`, a sufficient but much larger choice.
    pub sufficient: f64,
}

/// Smallest `k` with `((d + 1) k^d)^{1/k} ≤ 1 + ε`.
pub fn choose_k(d: u32, eps: f64) -> Result<KChoice> {
    if d == 0 || !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::invalid("need d ≥ 1 and 0 < ε ≤ 1/2"));
    }
    let target = (1.0 + eps).ln();
    let df = d as f64;
    let log_growth = |k: usize| ((df + 1.0).ln() + df * (k as f64).ln()) / k as f64;
    let k = (1..=100_000_000usize)
        .find(|&k| log_growth(k) <= target)
        .ok_or_else(|| Error::invalid("no k found below 10^8"))?;
    let r = df / eps;
    Ok(KChoice { k, growth: log_growth(k).exp(), sufficient: 100.0 * r * r.ln() })
}

/// Product of the block point lists, projected to the first `n` coordinates.
/// Row-major with the first block most significant.
pub fn assemble(designs: &[BlockDesign], n: usize) -> Result<Vec<Vec<C64>>> {
    let total: usize = designs.iter().map(|d| d.k).sum();
    let last = designs.last().map_or(0, |d| d.k);
    if designs.is_empty() || total < n || total - last >= n {
        return Err(Error::invalid(format!("blocks cover {total} coordinates, which does not fit n = {n}")));
    }
    let mut out: Vec<Vec<C64>> = vec![Vec::new()];
    for d in designs {
        out = out
            .into_iter()
            .flat_map(|p| {
                d.nodes.iter().map(move |y| {
                    let mut q = p.clone();
                    q.extend_from_slice(y);
                    q
                })
            })
            .collect();
    }
    for p in &mut out {
        p.truncate(n);
    }
    Ok(out)
}

/// Block schemes covering `n` coordinates with `⌈n/k⌉` copies of one design.
pub fn block_schemes(design: &BlockDesign, n: usize) -> Result<Vec<NodeScheme>> {
    let s = design.scheme()?;
    Ok(vec![s; n.div_ceil(design.k)])
}

/// Monte Carlo estimate of `E|det P|²` for points uniform on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
    /// `M!`.
    pub expected: f64,
}

impl MomentEstimate {
    /// `|mean − M!| / std_err`.
    pub fn z_score(&self) -> f64 {
        (self.mean - self.expected).abs() / self.std_err
    }
}

pub fn det_second_moment(lambda: &ExponentSet, samples: usize, seed: u64) -> Result<MomentEstimate> {
    if samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let m = lambda.len();
    let k = lambda.k;
    let ranges = par::chunk_ranges(samples, 64);
    let parts = par::map_slice(&ranges, |range| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(range.start as u64);
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for _ in range.clone() {
            let pts: Vec<Vec<C64>> = (0..m)
                .map(|_| {
                    (0..k)
                        .map(|_| {
                            let z = random_disc_point(&mut rng);
                            z / z.norm()
                        })
                        .collect()
                })
                .collect();
            let v = linalg::det(&block_matrix(&pts, &lambda.elements)).map_or(0.0, |d| d.norm_sqr());
            s1 += v;
            s2 += v * v;
        }
        (s1, s2)
    });
    let (s1, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean) * nf / (nf - 1.0);
    Ok(MomentEstimate {
        mean,
        std_err: (var / nf).sqrt(),
        samples,
        expected: ln_factorial(m).exp(),
    })
}

/// JSON view of a sampling set.
pub fn points_json(points: &[Vec<C64>]) -> Vec<Vec<ReIm>> {
    points.iter().map(|p| p.iter().map(|&z| ReIm::from(z)).collect()).collect()
}
