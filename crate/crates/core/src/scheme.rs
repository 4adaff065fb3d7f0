//! Splits of moment coefficients into non-negative parts, and the
//! piecewise-constant maps `r` and `w` on `[0, D]` built from them.
//!
//! With `D = 4L + 1`, `r` takes the value `s ∈ {1, −1, i, −i}` on a section of
//! length `L + 1` (for `s = 1`) or `L`. Inside section `s`, `w` visits every node
//! `k` twice: once for length `c_k^{(s)}` and once for the slack share
//! `t^{(s)}/N`. For `U` uniform on `[0, D]` this gives `E[r(U)] = 1/D` and
//! `E[r(U) w(U)^α] = x^α / D` for `0 ≤ α ≤ K − 1`.

use serde::{Deserialize, Serialize};

use crate::cplx::{KahanSum, ReIm};
use crate::linalg;
use crate::poly::Monomial;
use crate::vander::{self, NodeVector};
use crate::{Error, Result, C64};

/// Value of `r` on one section.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "+i")]
    PlusI,
    #[serde(rename = "-i")]
    MinusI,
}

impl Sign {
    /// Fixed section order.
    pub const ALL: [Sign; 4] = [Sign::Plus, Sign::Minus, Sign::PlusI, Sign::MinusI];

    pub fn value(self) -> C64 {
        match self {
            Sign::Plus => C64::new(1.0, 0.0),
            Sign::Minus => C64::new(-1.0, 0.0),
            Sign::PlusI => C64::new(0.0, 1.0),
            Sign::MinusI => C64::new(0.0, -1.0),
        }
    }

    /// Multiplies `z` by this sign without rounding.
    pub fn apply(self, z: C64) -> C64 {
        match self {
            Sign::Plus => z,
            Sign::Minus => -z,
            Sign::PlusI => C64::new(-z.im, z.re),
            Sign::MinusI => C64::new(z.im, -z.re),
        }
    }
}

/// Non-negative parts `c^{(s)}` and slacks `t^{(s)}`, indexed in [`Sign::ALL`]
/// order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSplit {
    pub cs: [Vec<f64>; 4],
    pub ts: [f64; 4],
    pub l: f64,
}

impl CoefficientSplit {
    pub fn len(&self) -> usize {
        self.cs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.cs[0].is_empty()
    }

    /// `c^{(1)} − c^{(−1)} + i c^{(i)} − i c^{(−i)}`.
    pub fn recombine(&self) -> Vec<C64> {
        (0..self.len())
            .map(|k| {
                C64::new(self.cs[0][k] - self.cs[1][k], self.cs[2][k] - self.cs[3][k])
            })
            .collect()
    }

    /// `Σ_k c_k^{(s)} + t^{(s)}` for each section.
    pub fn section_masses(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, m) in out.iter_mut().enumerate() {
            *m = crate::cplx::compensated_sum(self.cs[i].iter().copied()) + self.ts[i];
        }
        out
    }
}

/// `max(Σ_k (Re c_k)_+, Σ_k (Im c_k)_+)`: the smallest `L` a split of `c`
/// accepts.
pub fn required_l(c: &[C64]) -> f64 {
    let re = crate::cplx::compensated_sum(c.iter().map(|v| v.re.max(0.0)));
    let im = crate::cplx::compensated_sum(c.iter().map(|v| v.im.max(0.0)));
    re.max(im)
}

/// Splits moment coefficients for the given `L`.
///
/// Fails with [`Error::Inadmissible`] when `Σ_k c_k` is not 1, and with
/// [`Error::LTooSmall`] when `L` is below [`required_l`].
pub fn split(c: &[C64], l: f64) -> Result<CoefficientSplit> {
    if !(l.is_finite() && l >= 0.0) {
        return Err(Error::invalid(format!("L = {l} must be finite and non-negative")));
    }
    let l1: f64 = c.iter().map(|v| v.norm()).sum();
    let total = C64::new(
        crate::cplx::compensated_sum(c.iter().map(|v| v.re)),
        crate::cplx::compensated_sum(c.iter().map(|v| v.im)),
    );
    if (total - C64::new(1.0, 0.0)).norm() > 1e-8 * l1.max(1.0) {
        return Err(Error::Inadmissible { re: total.re, im: total.im });
    }
    let required = required_l(c);
    if l < required - 1e-12 * required.max(1.0) {
        return Err(Error::LTooSmall { given: l, required });
    }
    let pos = |v: f64| if v > 0.0 { v } else { 0.0 };
    let cs = [
        c.iter().map(|v| pos(v.re)).collect::<Vec<_>>(),
        c.iter().map(|v| pos(-v.re)).collect(),
        c.iter().map(|v| pos(v.im)).collect(),
        c.iter().map(|v| pos(-v.im)).collect(),
    ];
    let t_re = pos(l + 1.0 - crate::cplx::compensated_sum(cs[0].iter().copied()));
    let t_im = pos(l - crate::cplx::compensated_sum(cs[2].iter().copied()));
    Ok(CoefficientSplit { cs, ts: [t_re, t_re, t_im, t_im], l })
}

/// Piecewise-constant function on `[0, D]` given as consecutive
/// `(length, label)` pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseMap<T> {
    d: f64,
    pieces: Vec<(f64, T)>,
}

impl<T: Copy> PiecewiseMap<T> {
    pub fn new(d: f64, pieces: Vec<(f64, T)>) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid(format!("total length {d} must be positive")));
        }
        if let Some((len, _)) = pieces.iter().find(|(len, _)| !(len.is_finite() && *len >= 0.0)) {
            return Err(Error::invalid(format!("piece length {len} must be finite and non-negative")));
        }
        let map = PiecewiseMap { d, pieces };
        let total = map.total_length();
        if (total - d).abs() > 1e-12 * d.max(1.0) {
            return Err(Error::invalid(format!("pieces cover {total}, expected {d}")));
        }
        Ok(map)
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn pieces(&self) -> &[(f64, T)] {
        &self.pieces
    }

    /// Compensated sum of piece lengths.
    pub fn total_length(&self) -> f64 {
        crate::cplx::compensated_sum(self.pieces.iter().map(|p| p.0))
    }

    /// Right end of every piece; the last one is pinned to `D`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut acc = KahanSum::default();
        let mut out: Vec<f64> = self
            .pieces
            .iter()
            .map(|p| {
                acc.add(p.0);
                acc.value().min(self.d)
            })
            .collect();
        if let Some(last) = out.last_mut() {
            *last = self.d;
        }
        out
    }

    /// Label at `t ∈ [0, D)`; pieces are half-open on the right.
    pub fn value_at(&self, t: f64) -> Option<T> {
        if !(0.0..self.d).contains(&t) {
            return None;
        }
        self.breakpoints()
            .iter()
            .zip(&self.pieces)
            .find(|(&end, (len, _))| t < end && *len > 0.0)
            .map(|(_, p)| p.1)
    }
}

/// `r` with pieces `(L+1, +1), (L, −1), (L, +i), (L, −i)`.
pub fn build_r(d: f64, l: f64) -> Result<PiecewiseMap<Sign>> {
    if !(l.is_finite() && l >= 0.0) {
        return Err(Error::invalid(format!("L = {l} must be finite and non-negative")));
    }
    if (d - (4.0 * l + 1.0)).abs() > 1e-12 * d.abs().max(1.0) {
        return Err(Error::invalid(format!("D = {d} does not equal 4L + 1 for L = {l}")));
    }
    PiecewiseMap::new(
        d,
        vec![(l + 1.0, Sign::Plus), (l, Sign::Minus), (l, Sign::PlusI), (l, Sign::MinusI)],
    )
}

/// `w` for a split over `N` nodes: within each section the pieces are
/// `(c_0^{(s)}, 0), (t^{(s)}/N, 0), (c_1^{(s)}, 1), (t^{(s)}/N, 1), …`.
/// Labels are node indices.
pub fn build_w(split: &CoefficientSplit) -> Result<PiecewiseMap<usize>> {
    let n = split.len();
    if n == 0 {
        return Err(Error::invalid("split over zero nodes"));
    }
    let mut pieces = Vec::with_capacity(8 * n);
    for s in 0..4 {
        let share = split.ts[s] / n as f64;
        for k in 0..n {
            pieces.push((split.cs[s][k], k));
            pieces.push((share, k));
        }
    }
    PiecewiseMap::new(4.0 * split.l + 1.0, pieces)
}

/// One interval of the common refinement of `r` and several `w` maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub len: f64,
    pub sign: Sign,
    pub labels: Vec<usize>,
}

/// Common refinement of `r` with `ws`, dropping empty intervals.
pub fn refine(r: &PiecewiseMap<Sign>, ws: &[&PiecewiseMap<usize>]) -> Result<Vec<Cell>> {
    let d = r.d();
    for w in ws {
        if (w.d() - d).abs() > 1e-12 * d.max(1.0) {
            return Err(Error::invalid(format!("maps have lengths {} and {}", d, w.d())));
        }
    }
    let r_ends = r.breakpoints();
    let w_ends: Vec<Vec<f64>> = ws.iter().map(|w| w.breakpoints()).collect();
    let mut ri = 0usize;
    let mut wi = vec![0usize; ws.len()];
    let mut pos = 0.0f64;
    let mut cells = Vec::new();
    loop {
        // skip pieces that end at or before the current position
        while ri < r_ends.len() && r_ends[ri] <= pos {
            ri += 1;
        }
        for (i, ends) in w_ends.iter().enumerate() {
            while wi[i] < ends.len() && ends[wi[i]] <= pos {
                wi[i] += 1;
            }
        }
        if ri >= r_ends.len() || wi.iter().zip(&w_ends).any(|(&i, e)| i >= e.len()) {
            break;
        }
        let mut next = r_ends[ri];
        for (i, ends) in w_ends.iter().enumerate() {
            next = next.min(ends[wi[i]]);
        }
        cells.push(Cell {
            len: next - pos,
            sign: r.pieces()[ri].1,
            labels: wi.iter().zip(ws).map(|(&i, w)| w.pieces()[i].1).collect(),
        });
        pos = next;
    }
    Ok(cells)
}

/// Compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexSum {
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

/// `E[r(U) w(U)^α]` for `U` uniform on `[0, D]`, summed exactly over the
/// common refinement. `nodes[k]` is the value of label `k`.
pub fn moment(
    r: &PiecewiseMap<Sign>,
    w: &PiecewiseMap<usize>,
    nodes: &[C64],
    alpha: u32,
) -> Result<C64> {
    let cells = refine(r, &[w])?;
    let mut acc = ComplexSum::default();
    for cell in &cells {
        let y = *nodes
            .get(cell.labels[0])
            .ok_or_else(|| Error::invalid(format!("label {} has no node", cell.labels[0])))?;
        acc.add(cell.sign.apply(crate::cplx::powi(y, alpha) * cell.len));
    }
    Ok(acc.value() / r.d())
}

/// Block version of [`moment`]: labels index points of `C^k` and `α ∈ N^k`.
pub fn moment_block(
    r: &PiecewiseMap<Sign>,
    w: &PiecewiseMap<usize>,
    points: &[Vec<C64>],
    alpha: &[u32],
) -> Result<C64> {
    let cells = refine(r, &[w])?;
    let mono = Monomial::new(alpha.to_vec());
    let mut acc = ComplexSum::default();
    for cell in &cells {
        let y = points
            .get(cell.labels[0])
            .ok_or_else(|| Error::invalid(format!("label {} has no point", cell.labels[0])))?;
        if y.len() != alpha.len() {
            return Err(Error::DimensionMismatch { expected: alpha.len(), found: y.len() });
        }
        acc.add(cell.sign.apply(mono.eval(y) * cell.len));
    }
    Ok(acc.value() / r.d())
}

/// `M` points of `C^k` together with an exponent basis `Λ` of size `M` whose
/// generalized Vandermonde system `Σ_j c_j y_j^β = z^β`, `β ∈ Λ`, is solvable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockRepr", into = "BlockRepr")]
pub struct BlockNodes {
    points: Vec<Vec<C64>>,
    lambda: Vec<Vec<u32>>,
    matrix: Vec<Vec<C64>>,
    det: C64,
}

#[derive(Serialize, Deserialize)]
struct BlockRepr {
    #[serde(with = "crate::cplx::vec2")]
    points: Vec<Vec<C64>>,
    lambda: Vec<Vec<u32>>,
}

impl TryFrom<BlockRepr> for BlockNodes {
    type Error = Error;

    fn try_from(r: BlockRepr) -> Result<Self> {
        BlockNodes::new(r.points, r.lambda)
    }
}

impl From<BlockNodes> for BlockRepr {
    fn from(b: BlockNodes) -> Self {
        BlockRepr { points: b.points, lambda: b.lambda }
    }
}

/// `[y_j^{β_i}]` with rows indexed by exponents and columns by points.
pub fn block_matrix(points: &[Vec<C64>], lambda: &[Vec<u32>]) -> Vec<Vec<C64>> {
    lambda
        .iter()
        .map(|beta| {
            let mono = Monomial::new(beta.clone());
            points.iter().map(|y| mono.eval(y)).collect()
        })
        .collect()
}

impl BlockNodes {
    pub fn new(points: Vec<Vec<C64>>, lambda: Vec<Vec<u32>>) -> Result<Self> {
        let m = points.len();
        if m == 0 || lambda.len() != m {
            return Err(Error::DimensionMismatch { expected: lambda.len(), found: m });
        }
        let k = lambda[0].len();
        for v in &points {
            if v.len() != k {
                return Err(Error::DimensionMismatch { expected: k, found: v.len() });
            }
            if v.iter().any(|z| !(z.norm() <= 1.0 + 1e-12)) {
                return Err(Error::invalid("block point outside the closed polydisc"));
            }
        }
        if lambda.iter().any(|b| b.len() != k) {
            return Err(Error::invalid("exponents of different widths"));
        }
        let matrix = block_matrix(&points, &lambda);
        let det = linalg::det(&matrix)?;
        if det.norm() <= singular_threshold(m) {
            return Err(Error::Singular(format!("block determinant {det} is numerically zero")));
        }
        Ok(BlockNodes { points, lambda, matrix, det })
    }

    pub fn points(&self) -> &[Vec<C64>] {
        &self.points
    }

    pub fn lambda(&self) -> &[Vec<u32>] {
        &self.lambda
    }

    pub fn det(&self) -> C64 {
        self.det
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn width(&self) -> usize {
        self.lambda[0].len()
    }

    /// Solves `Σ_j c_j y_j^β = z^β` for all `β ∈ Λ`.
    pub fn solve(&self, z: &[C64]) -> Result<Vec<C64>> {
        if z.len() != self.width() {
            return Err(Error::DimensionMismatch { expected: self.width(), found: z.len() });
        }
        let rhs: Vec<C64> = self
            .lambda
            .iter()
            .map(|b| Monomial::new(b.clone()).eval(z))
            .collect();
        linalg::solve(&self.matrix, &rhs)
    }

    /// `M · M^{M/2} / |det|`, a bound on `Σ_j |c_j(z)|` over the polydisc
    /// (Hadamard bound on each Cramer numerator).
    pub fn l1_bound(&self) -> f64 {
        let m = self.len() as f64;
        (m.ln() + 0.5 * m * m.ln() - self.det.norm().ln()).exp()
    }
}

/// Determinants at or below this size are treated as zero.
pub fn singular_threshold(m: usize) -> f64 {
    let mf = m as f64;
    1e-12 * (0.5 * mf * mf.ln()).exp()
}

/// Node set of one coordinate, or of one block of coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeScheme {
    Coordinate { nodes: NodeVector },
    Block(BlockNodes),
}

impl NodeScheme {
    pub fn coordinate(nodes: NodeVector) -> Self {
        NodeScheme::Coordinate { nodes }
    }

    /// Number of nodes (`K`, or `M` for a block).
    pub fn len(&self) -> usize {
        match self {
            NodeScheme::Coordinate { nodes } => nodes.len(),
            NodeScheme::Block(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of coordinates covered.
    pub fn width(&self) -> usize {
        match self {
            NodeScheme::Coordinate { .. } => 1,
            NodeScheme::Block(b) => b.width(),
        }
    }

    /// Coordinates of node `idx`.
    pub fn point(&self, idx: usize) -> Vec<C64> {
        match self {
            NodeScheme::Coordinate { nodes } => vec![nodes.nodes()[idx]],
            NodeScheme::Block(b) => b.points()[idx].clone(),
        }
    }

    /// Moment coefficients for a target with [`width`](Self::width) coordinates.
    pub fn solve(&self, target: &[C64]) -> Result<Vec<C64>> {
        match self {
            NodeScheme::Coordinate { nodes } => {
                if target.len() != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, found: target.len() });
                }
                Ok(vander::solve_moments(nodes, target[0])?.c)
            }
            NodeScheme::Block(b) => b.solve(target),
        }
    }

    /// Target-independent bound on `Σ_k |c_k|` over the closed (poly)disc.
    pub fn global_l_bound(&self) -> f64 {
        match self {
            NodeScheme::Coordinate { nodes } => nodes.l1_bound(),
            NodeScheme::Block(b) => b.l1_bound(),
        }
    }

    /// The roots-of-unity bound, when the nodes are `Ω_K` in natural order.
    pub fn log_k_bound(&self) -> Option<f64> {
        match self {
            NodeScheme::Coordinate { nodes } if nodes.is_roots_of_unity() => {
                Some(vander::omega_l1_bound(nodes.len()))
            }
            _ => None,
        }
    }

    /// Minimum pairwise node distance of a coordinate scheme.
    pub fn eta(&self) -> Option<f64> {
        match self {
            NodeScheme::Coordinate { nodes } => Some(nodes.eta()),
            NodeScheme::Block(_) => None,
        }
    }
}

/// How the constant `L` (and so `D = 4L + 1`) is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LPolicy {
    /// 1.1 times the largest split requirement over the actual targets.
    PerRun,
    /// The target-independent bound of each scheme.
    GlobalBound,
    /// `2 + Σ_{j=2}^{⌈(K−1)/2⌉} 1/j`; roots-of-unity coordinates only.
    LogK,
    Fixed(f64),
}

impl LPolicy {
    pub fn name(&self) -> String {
        match self {
            LPolicy::PerRun => "per-run".into(),
            LPolicy::GlobalBound => "global-bound".into(),
            LPolicy::LogK => "log-k".into(),
            LPolicy::Fixed(v) => format!("fixed({v})"),
        }
    }
}

impl std::str::FromStr for LPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-run" => Ok(LPolicy::PerRun),
            "global-bound" => Ok(LPolicy::GlobalBound),
            "log-k" => Ok(LPolicy::LogK),
            other => other
                .parse::<f64>()
                .map(LPolicy::Fixed)
                .map_err(|_| Error::invalid(format!("unknown L policy {other:?}"))),
        }
    }
}

/// Headroom applied by [`LPolicy::PerRun`].
pub const PER_RUN_HEADROOM: f64 = 1.1;

/// Largest split requirement of `scheme` over the given targets, capped by
/// the scheme's global bound.
pub fn compute_l(scheme: &NodeScheme, targets: &[Vec<C64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in targets {
        let c = scheme.solve(t)?;
        worst = worst.max(required_l(&c));
    }
    Ok(worst.min(scheme.global_l_bound()))
}

/// Resolves a policy to a value of `L` for schemes paired with their targets.
pub fn resolve_l(policy: LPolicy, pairs: &[(&NodeScheme, Vec<C64>)]) -> Result<f64> {
    match policy {
        LPolicy::PerRun => {
            let mut worst: f64 = 0.0;
            for (scheme, target) in pairs {
                worst = worst.max(compute_l(scheme, std::slice::from_ref(target))?);
            }
            Ok(PER_RUN_HEADROOM * worst)
        }
        LPolicy::GlobalBound => {
            Ok(pairs.iter().map(|(s, _)| s.global_l_bound()).fold(0.0, f64::max))
        }
        LPolicy::LogK => {
            let mut worst: f64 = 0.0;
            for (scheme, _) in pairs {
                let b = scheme.log_k_bound().ok_or_else(|| {
                    Error::invalid("the log-k policy needs roots-of-unity coordinates")
                })?;
                worst = worst.max(b);
            }
            Ok(worst)
        }
        LPolicy::Fixed(v) => {
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(Error::invalid(format!("fixed L = {v} must be finite and non-negative")))
            }
        }
    }
}

/// `(ReIm)` helper so reports can list node sets.
pub fn scheme_points(scheme: &NodeScheme) -> Vec<Vec<ReIm>> {
    (0..scheme.len())
        .map(|i| scheme.point(i).into_iter().map(ReIm::from).collect())
        .collect()
}
