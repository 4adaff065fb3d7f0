//! Moment-matching Vandermonde solves on a single coordinate.
//!
//! For nodes `y_0, …, y_{K−1}` and a target `x`, [`solve_moments`] returns the
//! weights `c_k(x)` with `Σ_k c_k y_k^j = x^j` for `0 ≤ j ≤ K − 1` (`0^0 = 1`).

pub mod exact;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::cplx::{root_of_unity, ReIm};
use crate::{Error, Result, C64};

pub use exact::{elimination_weights, elimination_weights_for, QComplex};

/// Slack allowed on `|y| ≤ 1` so that rounded unimodular nodes are accepted.
const DISC_SLACK: f64 = 1e-12;

/// Distance below which the roots-of-unity closed form switches to the
/// direct sum, away from its removable singularity.
const CLOSED_FORM_CUTOFF: f64 = 1e-3;

/// Ordered distinct nodes in the closed unit disc, with the inverse of their
/// Vandermonde matrix cached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ReIm>", into = "Vec<ReIm>")]
pub struct NodeVector {
    nodes: Vec<C64>,
    eta: f64,
    roots: bool,
    /// `inverse[j][k]`: coefficient of `t^k` in the Lagrange basis polynomial
    /// of node `j`.
    inverse: Vec<Vec<C64>>,
}

impl NodeVector {
    pub fn new(nodes: Vec<C64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("node set is empty"));
        }
        for (k, y) in nodes.iter().enumerate() {
            if !(y.re.is_finite() && y.im.is_finite()) {
                return Err(Error::invalid(format!("node {k} is not finite")));
            }
            if y.norm() > 1.0 + DISC_SLACK {
                return Err(Error::invalid(format!(
                    "node {k} = {y} lies outside the closed unit disc"
                )));
            }
        }
        let eta = min_distance(&nodes);
        if nodes.len() > 1 && eta <= 0.0 {
            return Err(Error::Singular("node set contains duplicate points".into()));
        }
        let kk = nodes.len();
        let roots = nodes
            .iter()
            .enumerate()
            .all(|(j, &y)| (y - root_of_unity(j, kk)).norm() <= 4.0 * f64::EPSILON);
        let inverse = lagrange_coefficients(&nodes);
        Ok(NodeVector { nodes, eta, roots, inverse })
    }

    /// `Ω_K = (1, ω, …, ω^{K−1})` in natural order.
    pub fn roots_of_unity(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        Self::new((0..k).map(|j| root_of_unity(j, k)).collect())
    }

    /// `K` equispaced real points `−1 + 2k/(K−1)` in `[−1, 1]`.
    pub fn equispaced(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("an equispaced grid needs K ≥ 2"));
        }
        let h = 2.0 / (k - 1) as f64;
        Self::new((0..k).map(|i| C64::new(-1.0 + h * i as f64, 0.0)).collect())
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Minimum pairwise distance (infinite for a single node).
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Whether the nodes are the `K`-th roots of unity in natural order.
    pub fn is_roots_of_unity(&self) -> bool {
        self.roots
    }

    /// Cached inverse of the Vandermonde matrix `V_{jk} = y_k^j`, indexed
    /// `[node][power]`.
    pub fn inverse(&self) -> &[Vec<C64>] {
        &self.inverse
    }

    /// `K (2/η)^{K−1}`, the general bound on `Σ_k |c_k(x)|`.
    pub fn l1_bound(&self) -> f64 {
        general_l1_bound(self.len(), self.eta)
    }
}

impl TryFrom<Vec<ReIm>> for NodeVector {
    type Error = Error;

    fn try_from(v: Vec<ReIm>) -> Result<Self> {
        NodeVector::new(v.into_iter().map(C64::from).collect())
    }
}

impl From<NodeVector> for Vec<ReIm> {
    fn from(n: NodeVector) -> Self {
        n.nodes.into_iter().map(ReIm::from).collect()
    }
}

fn min_distance(nodes: &[C64]) -> f64 {
    let mut eta = f64::INFINITY;
    for j in 0..nodes.len() {
        for k in j + 1..nodes.len() {
            eta = eta.min((nodes[j] - nodes[k]).norm());
        }
    }
    eta
}

/// Orders nodes so that each next node maximizes the product of distances
/// to those already chosen. Multiplying linear factors in this order keeps
/// intermediate coefficients small.
fn leja_order(nodes: &[C64]) -> Vec<usize> {
    let n = nodes.len();
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let first = (0..n)
        .max_by(|&a, &b| nodes[a].norm().total_cmp(&nodes[b].norm()).then(b.cmp(&a)))
        .unwrap_or(0);
    order.push(first);
    used[first] = true;
    let mut score: Vec<f64> = nodes.iter().map(|&y| (y - nodes[first]).norm().ln()).collect();
    for _ in 1..n {
        let next = (0..n)
            .filter(|&i| !used[i])
            .max_by(|&a, &b| score[a].total_cmp(&score[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        used[next] = true;
        order.push(next);
        for i in 0..n {
            score[i] += (nodes[i] - nodes[next]).norm().ln();
        }
    }
    order
}

/// Rows of the Vandermonde inverse: coefficients of `∏_{m≠j}(t − y_m)`
/// divided by `∏_{m≠j}(y_j − y_m)`.
fn lagrange_coefficients(nodes: &[C64]) -> Vec<Vec<C64>> {
    let k = nodes.len();
    // master polynomial ∏_m (t − y_m), coefficients in ascending powers
    let mut master = vec![C64::new(0.0, 0.0); k + 1];
    master[0] = C64::new(1.0, 0.0);
    let mut deg = 0;
    for idx in leja_order(nodes) {
        let y = nodes[idx];
        for p in (0..=deg + 1).rev() {
            let below = if p > 0 { master[p - 1] } else { C64::new(0.0, 0.0) };
            master[p] = below - y * master[p];
        }
        deg += 1;
    }
    (0..k)
        .map(|j| {
            let yj = nodes[j];
            // synthetic division of the master polynomial by (t − y_j)
            let mut q = vec![C64::new(0.0, 0.0); k];
            let mut carry = C64::new(0.0, 0.0);
            for p in (1..=k).rev() {
                carry = master[p] + yj * carry;
                q[p - 1] = carry;
            }
            let denom: C64 = (0..k)
                .filter(|&m| m != j)
                .map(|m| yj - nodes[m])
                .product();
            q.into_iter().map(|v| v / denom).collect()
        })
        .collect()
}

/// Solution `c(x)` of the moment system together with its target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCoefficients {
    #[serde(with = "crate::cplx::vec")]
    pub c: Vec<C64>,
    #[serde(with = "crate::cplx::one")]
    pub x: C64,
    pub l1: f64,
}

impl MomentCoefficients {
    pub fn from_vec(c: Vec<C64>, x: C64) -> Self {
        let l1 = c.iter().map(|v| v.norm()).sum();
        MomentCoefficients { c, x, l1 }
    }

    /// `max_j |Σ_k c_k y_k^j − x^j|` over `0 ≤ j < K`.
    pub fn residual(&self, nodes: &[C64]) -> f64 {
        moment_residual(nodes, &self.c, self.x)
    }
}

pub fn moment_residual(nodes: &[C64], c: &[C64], x: C64) -> f64 {
    let mut pw: Vec<C64> = vec![C64::new(1.0, 0.0); nodes.len()];
    let mut xp = C64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for _ in 0..nodes.len() {
        let s: C64 = c.iter().zip(&pw).map(|(a, b)| a * b).sum();
        worst = worst.max((s - xp).norm());
        for (p, y) in pw.iter_mut().zip(nodes) {
            *p *= y;
        }
        xp *= x;
    }
    worst
}

/// Solves the moment system for target `x` in the closed unit disc.
pub fn solve_moments(nodes: &NodeVector, x: C64) -> Result<MomentCoefficients> {
    if !(x.re.is_finite() && x.im.is_finite()) || x.norm() > 1.0 + DISC_SLACK {
        return Err(Error::invalid(format!("target {x} lies outside the closed unit disc")));
    }
    let c = if nodes.roots {
        roots_closed_form(nodes.len(), x)
    } else {
        nodes
            .inverse
            .iter()
            .map(|row| row.iter().rev().fold(C64::new(0.0, 0.0), |acc, &b| acc * x + b))
            .collect()
    };
    Ok(MomentCoefficients::from_vec(c, x))
}

/// `c_j = (1 − x^K) / (K (1 − ω^{−j} x))`, replaced by the equivalent sum
/// `(1/K) Σ_k (ω^{−j} x)^k` near `x = ω^j`.
pub fn roots_closed_form(k: usize, x: C64) -> Vec<C64> {
    let kf = k as f64;
    let one = C64::new(1.0, 0.0);
    let xk = crate::cplx::powi(x, k as u32);
    (0..k)
        .map(|j| {
            let u = root_of_unity((k - j % k) % k, k) * x;
            let gap = one - u;
            if gap.norm() < CLOSED_FORM_CUTOFF {
                let mut acc = C64::new(0.0, 0.0);
                let mut p = one;
                for _ in 0..k {
                    acc += p;
                    p *= u;
                }
                acc / kf
            } else {
                (one - xk) / (gap * kf)
            }
        })
        .collect()
}

/// Entrywise bound `R^{d−1−k} C(d−1, k) / η^{d−1}` on the inverse of a `d × d`
/// Vandermonde matrix whose nodes have modulus at most `R` and separation at
/// least `η`. Indexed `[node][power]`; rows are identical.
pub fn inverse_entry_bound(d: usize, radius: f64, eta: f64) -> Vec<Vec<f64>> {
    let row: Vec<f64> = (0..d)
        .map(|k| {
            radius.powi((d - 1 - k) as i32) * binomial(d - 1, k) / eta.powi(d as i32 - 1)
        })
        .collect();
    vec![row; d]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `K (2/η)^{K−1}`.
pub fn general_l1_bound(k: usize, eta: f64) -> f64 {
    if k <= 1 {
        return 1.0;
    }
    k as f64 * (2.0 / eta).powi(k as i32 - 1)
}

/// `2 + Σ_{j=2}^{⌈(K−1)/2⌉} 1/j`, the bound on `Σ_j |c_j(x)|` for `Ω_K`.
pub fn omega_l1_bound(k: usize) -> f64 {
    let top = k.saturating_sub(1).div_ceil(2);
    2.0 + (2..=top).map(|j| 1.0 / j as f64).sum::<f64>()
}

/// Residual tolerance scaled by the conditioning proxy `K (2/η)^{K−1}`.
pub fn residual_tolerance(nodes: &NodeVector) -> f64 {
    1e-10 * nodes.l1_bound().max(1.0)
}

/// Elimination weights as doubles.
pub fn weights_f64(a: &[BigRational]) -> Vec<f64> {
    a.iter().map(exact::q_to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::poly::random_disc_point;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Random nodes in the disc with separation at least `eta`, by rejection.
    fn separated_nodes(rng: &mut ChaCha8Rng, k: usize, eta: f64) -> Vec<C64> {
        loop {
            let v: Vec<C64> = (0..k).map(|_| random_disc_point(rng)).collect();
            if min_distance(&v) >= eta {
                return v;
            }
        }
    }

    fn generic_solve(nodes: &[C64], x: C64) -> Vec<C64> {
        let k = nodes.len();
        let rows: Vec<Vec<C64>> = (0..k)
            .map(|j| nodes.iter().map(|&y| crate::cplx::powi(y, j as u32)).collect())
            .collect();
        let rhs: Vec<C64> = (0..k).map(|j| crate::cplx::powi(x, j as u32)).collect();
        linalg::solve(&rows, &rhs).unwrap()
    }

    #[test]
    fn interpolation_at_a_node() {
        let nodes = NodeVector::roots_of_unity(3).unwrap();
        assert!(nodes.is_roots_of_unity());
        let m = solve_moments(&nodes, root_of_unity(1, 3)).unwrap();
        for (j, v) in m.c.iter().enumerate() {
            let want = if j == 1 { 1.0 } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() < 1e-14, "{j}: {v}");
        }
    }

    #[test]
    fn roots_at_origin_are_uniform() {
        for k in [2usize, 5, 17] {
            let nodes = NodeVector::roots_of_unity(k).unwrap();
            let m = solve_moments(&nodes, c(0.0, 0.0)).unwrap();
            for v in &m.c {
                assert!((v - c(1.0 / k as f64, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn two_real_nodes() {
        let nodes = NodeVector::new(vec![c(0.9, 0.0), c(-0.9, 0.0)]).unwrap();
        assert!(!nodes.is_roots_of_unity());
        let m = solve_moments(&nodes, c(0.3, 0.0)).unwrap();
        let oracle = generic_solve(nodes.nodes(), c(0.3, 0.0));
        assert!((m.c[0] - c(2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((m.c[1] - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        for (a, b) in m.c.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn duplicate_or_outside_nodes_rejected() {
        assert!(matches!(
            NodeVector::new(vec![c(0.5, 0.0), c(0.5, 0.0)]),
            Err(Error::Singular(_))
        ));
        assert!(NodeVector::new(vec![c(1.5, 0.0)]).is_err());
        assert!(NodeVector::new(vec![]).is_err());
    }

    #[test]
    fn target_outside_disc_rejected() {
        let nodes = NodeVector::roots_of_unity(2).unwrap();
        assert!(solve_moments(&nodes, c(1.1, 0.0)).is_err());
    }

    #[test]
    fn eta_is_recomputed() {
        let nodes = NodeVector::new(vec![c(0.0, 0.0), c(0.3, 0.4), c(-1.0, 0.0)]).unwrap();
        assert!((nodes.eta() - 0.5).abs() < 1e-15);
        let back: NodeVector = serde_json::from_str(&serde_json::to_string(&nodes).unwrap()).unwrap();
        assert_eq!(back, nodes);
    }

    #[test]
    fn two_node_inverse_meets_bound() {
        let nodes = NodeVector::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let bound = inverse_entry_bound(2, 1.0, 2.0);
        for row in &bound {
            assert_eq!(row, &vec![0.5, 0.5]);
        }
        for row in nodes.inverse() {
            for v in row {
                assert!((v.norm() - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn three_node_bound_pattern() {
        let b = inverse_entry_bound(3, 1.0, 1.0);
        assert_eq!(b[0], vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn inverse_entries_respect_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let k = rng.gen_range(2..=7);
            let v = separated_nodes(&mut rng, k, 0.15);
            let nodes = NodeVector::new(v).unwrap();
            let radius = nodes.nodes().iter().map(|y| y.norm()).fold(0.0, f64::max);
            let bound = inverse_entry_bound(k, radius, nodes.eta());
            for (row, brow) in nodes.inverse().iter().zip(&bound) {
                for (v, b) in row.iter().zip(brow) {
                    assert!(v.norm() <= b + 1e-9);
                }
            }
        }
    }

    #[test]
    fn inverse_matches_exact_elementary_symmetric_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = separated_nodes(&mut rng, 4, 0.3);
        let nodes = NodeVector::new(v.clone()).unwrap();
        let q: Vec<QComplex> = v.iter().map(|&y| exact::q_from_c64(y).unwrap()).collect();
        for power in 0..4 {
            // the inverse times e_power is the exact moment solution for x^power basis
            let mut rows = Vec::new();
            for j in 0..4 {
                rows.push(
                    q.iter()
                        .map(|y| {
                            (0..j).fold(exact::q_int(1), |acc, _| acc * y.clone())
                        })
                        .collect::<Vec<_>>(),
                );
            }
            let mut rhs = vec![exact::q_int(0); 4];
            rhs[power] = exact::q_int(1);
            let col = exact::solve(rows, rhs).unwrap();
            for (node, val) in col.iter().enumerate() {
                let got = nodes.inverse()[node][power];
                assert!((got - exact::q_to_c64(val)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn moment_residuals_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let k = rng.gen_range(1..=8);
            let v = separated_nodes(&mut rng, k, 0.2);
            let nodes = NodeVector::new(v).unwrap();
            let x = random_disc_point(&mut rng);
            let m = solve_moments(&nodes, x).unwrap();
            assert!(m.residual(nodes.nodes()) <= 1e-10);
            assert!(m.l1 <= nodes.l1_bound() + 1e-9);
        }
    }

    #[test]
    fn closed_form_agrees_with_generic_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for k in [2usize, 3, 7, 16, 33, 64] {
            let nodes = NodeVector::roots_of_unity(k).unwrap();
            let plain = NodeVector {
                roots: false,
                ..nodes.clone()
            };
            for _ in 0..1000 {
                let x = random_disc_point(&mut rng);
                let a = solve_moments(&nodes, x).unwrap();
                let b = solve_moments(&plain, x).unwrap();
                for (u, v) in a.c.iter().zip(&b.c) {
                    assert!((u - v).norm() < 1e-10, "K={k} x={x}");
                }
            }
        }
    }

    #[test]
    fn closed_form_near_singularity() {
        let k = 5;
        let x = root_of_unity(2, k) * (1.0 - 1e-9);
        let cc = roots_closed_form(k, x);
        assert!((cc[2] - c(1.0, 0.0)).norm() < 1e-8);
        let nodes = NodeVector::roots_of_unity(k).unwrap();
        assert!(moment_residual(nodes.nodes(), &cc, x) < 1e-12);
    }

    #[test]
    fn omega_boundary_l1_bound() {
        for k in 2..=64usize {
            let nodes = NodeVector::roots_of_unity(k).unwrap();
            let bound = omega_l1_bound(k);
            let steps = 10_000;
            let worst = (0..steps)
                .map(|s| {
                    let x = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (s as f64 + 0.5) / steps as f64);
                    solve_moments(&nodes, x).unwrap().l1
                })
                .fold(0.0, f64::max);
            assert!(worst <= bound + 1e-9, "K={k}: {worst} > {bound}");
        }
    }

    #[test]
    fn omega_bound_values() {
        assert_eq!(omega_l1_bound(2), 2.0);
        assert_eq!(omega_l1_bound(3), 2.0);
        assert_eq!(omega_l1_bound(4), 2.5);
    }

    proptest! {
        #[test]
        fn weights_cancel_inverse_powers(d in 1u32..=8) {
            use num_traits::{One, Zero};
            let a = elimination_weights(d).unwrap();
            let total = a.iter().fold(BigRational::zero(), |acc, v| acc + v);
            prop_assert!(total.is_one());
            for k in 1..d {
                let s = a.iter().enumerate().fold(BigRational::zero(), |acc, (j, w)| {
                    let m = exact::rational((d + j as u32).pow(k) as i64, 1);
                    acc + w / m
                });
                prop_assert!(s.is_zero());
            }
            let af = weights_f64(&a);
            let scale = exact::q_to_f64(&exact::abs_sum(&a));
            for k in 1..d as i32 {
                let s: f64 = af
                    .iter()
                    .enumerate()
                    .map(|(j, &w)| w / ((d as f64 + j as f64).powi(k)))
                    .sum();
                prop_assert!(s.abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn closed_form_reproduces_moments(k in 1usize..=32, r in 0.0f64..=1.0, th in 0.0f64..6.3) {
            let x = C64::from_polar(r, th);
            let nodes = NodeVector::roots_of_unity(k).unwrap();
            let m = solve_moments(&nodes, x).unwrap();
            prop_assert!(m.residual(nodes.nodes()) < 1e-10);
        }
    }
}
