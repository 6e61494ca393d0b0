//! The symplectic vector space of off-diagonal block matrices attached to a
//! configuration of marked points on the Fourier sphere.
//!
//! A graded space `V = ⊕_j W_j` (parts `j`, each refined into node spaces
//! `V_i`) and an injective map `a : J → ℂ ∪ {∞}` determine the constants
//! `φ_ij` (`φ_ii = 0`, `φ_ij = 1/(a_i − a_j)` for finite pairs, and
//! `φ_{i∞} = 1 = −φ_{∞i}`) and the symplectic form
//! `ω = ½ Tr(dΞ ∧ dΓ)` with `Ξ = φ(Γ)`.

use crate::linalg::{self, cr, eye, zeros, CMat, C, RANK_RTOL};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("alpha and beta do not commute (residual {0:.3e})")]
    NonCommuting(f64),
    #[error("matrix is not diagonalizable within tolerance")]
    NotDiagonalizable,
    #[error("alpha and beta have a common kernel vector")]
    CommonKernel,
    #[error("the diagonal part of gamma on part {0} is not semisimple")]
    NonSemisimpleDiagonal(usize),
    #[error("marked points on the Fourier sphere must be distinct")]
    PointsNotDistinct,
    #[error("times within part {0} must be pairwise distinct")]
    TimesNotDistinct(usize),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("Mobius matrix must have determinant 1 (got residual {0:.3e})")]
    NotUnimodular(f64),
    #[error("evaluation point hits the pole at t = {0}")]
    PoleEvaluation(C),
    #[error("orientation must cover every core edge exactly once")]
    IncompleteOrientation,
    #[error("operation needs a part at infinity")]
    NoInfinityPart,
}

/// A marked point of the Fourier sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FourierPoint {
    Finite(C),
    Infinity,
}

impl FourierPoint {
    pub fn is_infinity(&self) -> bool {
        matches!(self, FourierPoint::Infinity)
    }
}

/// The injective map from parts to the Fourier sphere, with the derived
/// pairing constants `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierConfig {
    points: Vec<FourierPoint>,
}

impl FourierConfig {
    pub fn new(points: Vec<FourierPoint>) -> Result<Self, PhaseError> {
        for (i, p) in points.iter().enumerate() {
            for q in &points[i + 1..] {
                let same = match (p, q) {
                    (FourierPoint::Infinity, FourierPoint::Infinity) => true,
                    (FourierPoint::Finite(a), FourierPoint::Finite(b)) => (a - b).norm() == 0.0,
                    _ => false,
                };
                if same {
                    return Err(PhaseError::PointsNotDistinct);
                }
            }
        }
        Ok(FourierConfig { points })
    }

    pub fn points(&self) -> &[FourierPoint] {
        &self.points
    }

    pub fn part_count(&self) -> usize {
        self.points.len()
    }

    pub fn infinity_part(&self) -> Option<usize> {
        self.points.iter().position(FourierPoint::is_infinity)
    }

    /// The constant φ_ij for a pair of part indices.
    pub fn phi(&self, i: usize, j: usize) -> C {
        if i == j {
            return cr(0.0);
        }
        match (&self.points[i], &self.points[j]) {
            (FourierPoint::Infinity, FourierPoint::Infinity) => cr(0.0),
            (FourierPoint::Finite(_), FourierPoint::Infinity) => cr(1.0),
            (FourierPoint::Infinity, FourierPoint::Finite(_)) => cr(-1.0),
            (FourierPoint::Finite(a), FourierPoint::Finite(b)) => cr(1.0) / (a - b),
        }
    }

    pub fn finite_value(&self, j: usize) -> Option<C> {
        match self.points[j] {
            FourierPoint::Finite(a) => Some(a),
            FourierPoint::Infinity => None,
        }
    }
}

/// The graded vector space `V = ⊕_j W_j = ⊕_j ⊕_{i ∈ I_j} V_i`, laid out
/// part-major in the canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedSpace {
    node_dims: Vec<Vec<usize>>,
    part_offsets: Vec<usize>,
    node_offsets: Vec<Vec<usize>>,
    dim: usize,
}

impl GradedSpace {
    pub fn new(node_dims: Vec<Vec<usize>>) -> Self {
        let mut part_offsets = Vec::with_capacity(node_dims.len());
        let mut node_offsets = Vec::with_capacity(node_dims.len());
        let mut at = 0;
        for part in &node_dims {
            part_offsets.push(at);
            let mut offs = Vec::with_capacity(part.len());
            for &d in part {
                offs.push(at);
                at += d;
            }
            node_offsets.push(offs);
        }
        GradedSpace {
            node_dims,
            part_offsets,
            node_offsets,
            dim: at,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn part_count(&self) -> usize {
        self.node_dims.len()
    }

    pub fn part_dim(&self, j: usize) -> usize {
        self.node_dims[j].iter().sum()
    }

    pub fn part_range(&self, j: usize) -> std::ops::Range<usize> {
        self.part_offsets[j]..self.part_offsets[j] + self.part_dim(j)
    }

    pub fn node_dims(&self) -> &[Vec<usize>] {
        &self.node_dims
    }

    pub fn node_dim(&self, j: usize, k: usize) -> usize {
        self.node_dims[j][k]
    }

    pub fn node_range(&self, j: usize, k: usize) -> std::ops::Range<usize> {
        let o = self.node_offsets[j][k];
        o..o + self.node_dims[j][k]
    }

    /// Flat list of nodes as (part, index-in-part) in canonical order.
    pub fn nodes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (j, part) in self.node_dims.iter().enumerate() {
            for k in 0..part.len() {
                out.push((j, k));
            }
        }
        out
    }

    /// Part of each basis index of V.
    pub fn part_of_index(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for j in 0..self.part_count() {
            for idx in self.part_range(j) {
                out[idx] = j;
            }
        }
        out
    }

    /// Apply φ blockwise: multiply the `(row ∈ part i, col ∈ part j)` entry
    /// by `φ_ij`.
    pub fn apply_phi(&self, fourier: &FourierConfig, m: &CMat) -> CMat {
        let parts = self.part_of_index();
        CMat::from_fn(self.dim, self.dim, |r, c| {
            m[(r, c)] * fourier.phi(parts[r], parts[c])
        })
    }

    /// Inverse of φ on the off-part-diagonal; part-diagonal blocks go to 0.
    pub fn apply_phi_inverse(&self, fourier: &FourierConfig, m: &CMat) -> CMat {
        let parts = self.part_of_index();
        CMat::from_fn(self.dim, self.dim, |r, c| {
            if parts[r] == parts[c] {
                cr(0.0)
            } else {
                m[(r, c)] / fourier.phi(parts[r], parts[c])
            }
        })
    }

    /// Part-block-diagonal projection δ.
    pub fn delta(&self, m: &CMat) -> CMat {
        let parts = self.part_of_index();
        CMat::from_fn(self.dim, self.dim, |r, c| {
            if parts[r] == parts[c] {
                m[(r, c)]
            } else {
                cr(0.0)
            }
        })
    }

    /// Off-part-diagonal projection: `m - δ(m)`.
    pub fn off_diagonal(&self, m: &CMat) -> CMat {
        m - self.delta(m)
    }

    /// The matrix `A = Σ_{j ≠ ∞} a_j Id_j` on V (zero on the ∞ part).
    pub fn a_matrix(&self, fourier: &FourierConfig) -> CMat {
        let mut m = zeros(self.dim, self.dim);
        for j in 0..self.part_count() {
            if let Some(a) = fourier.finite_value(j) {
                for idx in self.part_range(j) {
                    m[(idx, idx)] = a;
                }
            }
        }
        m
    }

    /// `X = ad_A^{-1}(B)` blockwise: divide the (part i, part j) block by
    /// `a_i − a_j`; blocks involving the ∞ part or the diagonal give zero.
    pub fn ad_a_inverse(&self, fourier: &FourierConfig, m: &CMat) -> CMat {
        let parts = self.part_of_index();
        CMat::from_fn(self.dim, self.dim, |r, c| {
            let (i, j) = (parts[r], parts[c]);
            if i == j {
                return cr(0.0);
            }
            match (fourier.finite_value(i), fourier.finite_value(j)) {
                (Some(ai), Some(aj)) => m[(r, c)] / (ai - aj),
                _ => cr(0.0),
            }
        })
    }

    /// Rows/columns of V not in part `j` (the subspace `U_j`), in order.
    pub fn complement_indices(&self, j: usize) -> Vec<usize> {
        let range = self.part_range(j);
        (0..self.dim).filter(|i| !range.contains(i)).collect()
    }

    /// Compress an End(V) matrix to End(U_j) by deleting part `j`.
    pub fn compress(&self, m: &CMat, j: usize) -> CMat {
        let keep = self.complement_indices(j);
        CMat::from_fn(keep.len(), keep.len(), |r, c| m[(keep[r], keep[c])])
    }
}

/// Γ ∈ End(V)°: the full matrix with vanishing part-diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    m: CMat,
}

impl PhasePoint {
    /// Wrap a full matrix, zeroing the part-diagonal blocks.
    pub fn new(space: &GradedSpace, m: CMat) -> Result<Self, PhaseError> {
        if m.nrows() != space.dim() || m.ncols() != space.dim() {
            return Err(PhaseError::Shape {
                expected: space.dim(),
                got: m.nrows(),
            });
        }
        Ok(PhasePoint {
            m: space.off_diagonal(&m),
        })
    }

    pub fn zero(space: &GradedSpace) -> Self {
        PhasePoint {
            m: zeros(space.dim(), space.dim()),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    /// Ξ = φ(Γ).
    pub fn xi(&self, space: &GradedSpace, fourier: &FourierConfig) -> CMat {
        space.apply_phi(fourier, &self.m)
    }

    /// Block `Hom(W_j, W_i)` of Γ.
    pub fn part_block(&self, space: &GradedSpace, i: usize, j: usize) -> CMat {
        let ri = space.part_range(i);
        let rj = space.part_range(j);
        self.m.view((ri.start, rj.start), (ri.len(), rj.len())).into_owned()
    }
}

/// The times `T̂ = Σ t_i Id_i`, stored per part per node.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    times: Vec<Vec<C>>,
}

impl TimeConfig {
    pub fn new(times: Vec<Vec<C>>) -> Result<Self, PhaseError> {
        for (j, part) in times.iter().enumerate() {
            for (k, t) in part.iter().enumerate() {
                for s in &part[k + 1..] {
                    if (t - s).norm() == 0.0 {
                        return Err(PhaseError::TimesNotDistinct(j));
                    }
                }
            }
        }
        Ok(TimeConfig { times })
    }

    pub fn values(&self) -> &[Vec<C>] {
        &self.times
    }

    pub fn value(&self, j: usize, k: usize) -> C {
        self.times[j][k]
    }

    /// The diagonal matrix T̂ on V.
    pub fn t_hat(&self, space: &GradedSpace) -> CMat {
        let mut m = zeros(space.dim(), space.dim());
        for (j, part) in self.times.iter().enumerate() {
            for (k, &t) in part.iter().enumerate() {
                for idx in space.node_range(j, k) {
                    m[(idx, idx)] = t;
                }
            }
        }
        m
    }

    /// Smallest within-part gap |t_i − t_i'|; `None` when every part is a
    /// single node.
    pub fn min_gap(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for part in &self.times {
            for (k, t) in part.iter().enumerate() {
                for s in &part[k + 1..] {
                    let g = (t - s).norm();
                    best = Some(best.map_or(g, |b: f64| b.min(g)));
                }
            }
        }
        best
    }
}

/// A tangent direction on the space of times, parallel to [`TimeConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDirection(pub Vec<Vec<C>>);

impl TimeDirection {
    pub fn zero_like(times: &TimeConfig) -> Self {
        TimeDirection(
            times
                .values()
                .iter()
                .map(|p| vec![cr(0.0); p.len()])
                .collect(),
        )
    }

    /// Unit direction along the time of one node.
    pub fn unit(times: &TimeConfig, j: usize, k: usize) -> Self {
        let mut d = Self::zero_like(times);
        d.0[j][k] = cr(1.0);
        d
    }

    /// The diagonal matrix δT̂ on V.
    pub fn t_hat(&self, space: &GradedSpace) -> CMat {
        let mut m = zeros(space.dim(), space.dim());
        for (j, part) in self.0.iter().enumerate() {
            for (k, &t) in part.iter().enumerate() {
                for idx in space.node_range(j, k) {
                    m[(idx, idx)] = t;
                }
            }
        }
        m
    }
}

/// The symplectic form `ω(u, v) = Tr(φ(u) v) = ½ Σ φ_ij Tr(u_ij v_ji − v_ij u_ji)`
/// on tangent vectors to the phase space.
pub fn omega(space: &GradedSpace, fourier: &FourierConfig, u: &CMat, v: &CMat) -> Result<C, PhaseError> {
    if u.nrows() != space.dim() || v.nrows() != space.dim() {
        return Err(PhaseError::Shape {
            expected: space.dim(),
            got: u.nrows().max(v.nrows()),
        });
    }
    Ok(linalg::trace(&(space.apply_phi(fourier, u) * v)))
}

/// An element of SL₂(ℂ) acting on the Fourier sphere; rows convention
/// `(∂, z) ↦ (a ∂ + b z, c ∂ + d z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: C,
    pub b: C,
    pub c: C,
    pub d: C,
}

impl Mobius {
    pub fn new(a: C, b: C, c: C, d: C) -> Result<Self, PhaseError> {
        let det = a * d - b * c;
        let residual = (det - cr(1.0)).norm();
        if residual > 1e-10 {
            return Err(PhaseError::NotUnimodular(residual));
        }
        Ok(Mobius { a, b, c, d })
    }

    pub fn identity() -> Self {
        Mobius {
            a: cr(1.0),
            b: cr(0.0),
            c: cr(0.0),
            d: cr(1.0),
        }
    }

    /// `(∂, z) ↦ (∂/c, c z)`.
    pub fn scaling(c0: C) -> Self {
        Mobius {
            a: cr(1.0) / c0,
            b: cr(0.0),
            c: cr(0.0),
            d: c0,
        }
    }

    /// `(∂, z) ↦ (∂ + c z, z)`: moves every finite point by `−c`.
    pub fn shear(c0: C) -> Self {
        Mobius {
            a: cr(1.0),
            b: c0,
            c: cr(0.0),
            d: cr(1.0),
        }
    }

    /// `(∂, z) ↦ (z, −∂)`: the transform whose action on an interval
    /// configuration is the duality permutation `(P, Q, T_0, T_∞) ↦
    /// (Q, −P, −T_∞, T_0)`.
    pub fn fourier_laplace() -> Self {
        Mobius {
            a: cr(0.0),
            b: cr(1.0),
            c: cr(-1.0),
            d: cr(0.0),
        }
    }

    pub fn inverse(&self) -> Self {
        Mobius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Transform a joint eigenvalue pair `(α, β)`.
    fn pair(&self, alpha: C, beta: C) -> (C, C) {
        (
            self.a * alpha + self.c * beta,
            self.b * alpha + self.d * beta,
        )
    }

    /// Image of a marked point, tracked through the pair representation
    /// `point = [−β : α]`. A transformed pair with `|α| ≤ 1e-12(|α|+|β|)`
    /// counts as ∞, so round trips land back on the exact point.
    pub fn apply_point(&self, p: FourierPoint) -> FourierPoint {
        let (alpha, beta) = match p {
            FourierPoint::Infinity => (cr(0.0), cr(1.0)),
            FourierPoint::Finite(a) => (cr(1.0), -a),
        };
        let (na, nb) = self.pair(alpha, beta);
        if pair_at_infinity(na, nb) {
            FourierPoint::Infinity
        } else {
            FourierPoint::Finite(-nb / na)
        }
    }
}

/// Relative test deciding whether a joint eigenvalue pair sits at ∞.
fn pair_at_infinity(alpha: C, beta: C) -> bool {
    alpha.norm() <= 1e-12 * (alpha.norm() + beta.norm())
}

/// Result of acting by an SL₂ element: the transformed configuration plus
/// the block-scalar renormalisation `ε` with `Γ' = εΓ`, `T̂' = εT̂`,
/// `Ξ' = Ξε⁻¹` (so `ε` is also the differential of the map on tangents).
#[derive(Debug, Clone)]
pub struct Sl2Image {
    pub fourier: FourierConfig,
    pub phase: PhasePoint,
    pub times: TimeConfig,
    /// diagonal left multiplier ε on V
    pub multiplier: CMat,
}

/// Act on the normalized data by `g`: transform each part's joint eigenvalue
/// pair `(α_j, β_j)` — `(0, 1)` at ∞ and `(1, −a_j)` otherwise — then
/// re-normalise by the block-scalar `ε` that restores unit leading
/// coefficients. This is exactly the composite of the generator actions.
pub fn sl2_act(
    g: &Mobius,
    space: &GradedSpace,
    fourier: &FourierConfig,
    phase: &PhasePoint,
    times: &TimeConfig,
) -> Result<Sl2Image, PhaseError> {
    let mut new_points = Vec::with_capacity(fourier.part_count());
    let mut eps = eye(space.dim());
    for j in 0..fourier.part_count() {
        let (alpha, beta) = match fourier.points()[j] {
            FourierPoint::Infinity => (cr(0.0), cr(1.0)),
            FourierPoint::Finite(a) => (cr(1.0), -a),
        };
        let (na, nb) = g.pair(alpha, beta);
        let (point, k) = if pair_at_infinity(na, nb) {
            (FourierPoint::Infinity, cr(1.0) / nb)
        } else {
            (FourierPoint::Finite(-nb / na), cr(1.0) / na)
        };
        new_points.push(point);
        for idx in space.part_range(j) {
            eps[(idx, idx)] = k;
        }
    }
    let fourier2 = FourierConfig::new(new_points)?;
    let phase2 = PhasePoint::new(space, &eps * phase.matrix())?;
    let times2 = TimeConfig::new(
        times
            .values()
            .iter()
            .enumerate()
            .map(|(j, part)| {
                let k = eps[(space.part_range(j).start, space.part_range(j).start)];
                part.iter().map(|t| t * k).collect()
            })
            .collect(),
    )?;
    Ok(Sl2Image {
        fourier: fourier2,
        phase: phase2,
        times: times2,
        multiplier: eps,
    })
}

/// Per-node residue data: `Q_i = Γ∘ι_i`, `P_i = −π_i∘Ξ`, `R_i = Q_i P_i ∈
/// End(U_i)` and `Λ_i = −P_i Q_i ∈ End(V_i)`.
#[derive(Debug, Clone)]
pub struct Residues {
    pub q: Vec<CMat>,
    pub p: Vec<CMat>,
    pub r: Vec<CMat>,
    pub lambda: Vec<CMat>,
    /// flat node list parallel to the vectors
    pub nodes: Vec<(usize, usize)>,
}

pub fn residues(
    space: &GradedSpace,
    fourier: &FourierConfig,
    phase: &PhasePoint,
) -> Residues {
    let xi = phase.xi(space, fourier);
    let gamma = phase.matrix();
    let mut out = Residues {
        q: Vec::new(),
        p: Vec::new(),
        r: Vec::new(),
        lambda: Vec::new(),
        nodes: space.nodes(),
    };
    for &(j, k) in &out.nodes.clone() {
        let cols = space.node_range(j, k);
        let rows = space.complement_indices(j);
        let q = CMat::from_fn(rows.len(), cols.len(), |r, c| {
            gamma[(rows[r], cols.start + c)]
        });
        let p = CMat::from_fn(cols.len(), rows.len(), |r, c| {
            -xi[(cols.start + r, rows[c])]
        });
        out.r.push(&q * &p);
        out.lambda.push(-(&p * &q));
        out.q.push(q);
        out.p.push(p);
    }
    out
}

/// `𝓑(z) = A z + B + T + Q (z − C)⁻¹ P ∈ End(U_∞)`; with no part at ∞ the
/// rational part is absent and the matrix lives on all of V.
pub fn connection_matrix(
    space: &GradedSpace,
    fourier: &FourierConfig,
    phase: &PhasePoint,
    times: &TimeConfig,
    z: C,
) -> Result<CMat, PhaseError> {
    let a_full = space.a_matrix(fourier);
    let t_full = times.t_hat(space);
    let gamma = phase.matrix();
    match fourier.infinity_part() {
        None => Ok(&a_full * z + space.off_diagonal(gamma) + t_full),
        Some(inf) => {
            // pole check against the times of the ∞ part
            for (k, &t) in times.values()[inf].iter().enumerate() {
                let _ = k;
                if (z - t).norm() < 1e-13 * (1.0 + t.norm()) {
                    return Err(PhaseError::PoleEvaluation(t));
                }
            }
            let keep = space.complement_indices(inf);
            let nu = keep.len();
            let irange = space.part_range(inf);
            let q = CMat::from_fn(nu, irange.len(), |r, c| {
                gamma[(keep[r], irange.start + c)]
            });
            let p = CMat::from_fn(irange.len(), nu, |r, c| {
                gamma[(irange.start + r, keep[c])]
            });
            // (z − C)⁻¹ is diagonal on W_∞
            let mut zc = zeros(irange.len(), irange.len());
            for (k, &t) in times.values()[inf].iter().enumerate() {
                for idx in space.node_range(inf, k) {
                    let local = idx - irange.start;
                    zc[(local, local)] = cr(1.0) / (z - t);
                }
            }
            let au = space.compress(&a_full, inf);
            let bu = space.compress(&space.off_diagonal(gamma), inf);
            let tu = space.compress(&t_full, inf);
            Ok(au * z + bu + tu + q * zc * p)
        }
    }
}

/// Outcome of the randomized irreducibility test.
#[derive(Debug, Clone)]
pub enum Stability {
    /// A certified proper nonzero graded invariant subspace: one orthonormal
    /// basis block per node.
    Reducible { witness: Vec<CMat> },
    ProbablyIrreducible,
}

/// Randomized closure test: seed vectors at every nonzero node and close
/// under all edge maps; a proper closure is an exact reducibility witness.
pub fn is_stable(
    space: &GradedSpace,
    phase: &PhasePoint,
    trials: usize,
    seed: u64,
) -> Stability {
    let nodes = space.nodes();
    let gamma = phase.matrix();
    let scale = linalg::max_abs(gamma).max(1.0);
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..trials.max(1) {
        for &(j, k) in &nodes {
            let d = space.node_dim(j, k);
            if d == 0 {
                continue;
            }
            let seed_vec = CMat::from_fn(d, 1, |_, _| {
                C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            if let Some(witness) = closure_deficient(space, gamma, (j, k), &seed_vec, scale) {
                return Stability::Reducible { witness };
            }
        }
    }
    Stability::ProbablyIrreducible
}

/// Close the span of a seed vector under all edge maps of the graph
/// representation; return per-node bases when the closure is proper.
fn closure_deficient(
    space: &GradedSpace,
    gamma: &CMat,
    at: (usize, usize),
    seed_vec: &CMat,
    scale: f64,
) -> Option<Vec<CMat>> {
    let nodes = space.nodes();
    let nidx: std::collections::HashMap<(usize, usize), usize> =
        nodes.iter().copied().enumerate().map(|(i, n)| (n, i)).collect();
    let mut bases: Vec<CMat> = nodes
        .iter()
        .map(|&(j, k)| zeros(space.node_dim(j, k), 0))
        .collect();
    let atol = RANK_RTOL * scale;
    // push the seed
    append_vec(&mut bases[nidx[&at]], seed_vec, atol);
    loop {
        let mut grew = false;
        for (src_i, &(js, ks)) in nodes.iter().enumerate() {
            if bases[src_i].ncols() == 0 {
                continue;
            }
            for (dst_i, &(jd, kd)) in nodes.iter().enumerate() {
                if js == jd {
                    continue; // no edges inside a part
                }
                let rs = space.node_range(js, ks);
                let rd = space.node_range(jd, kd);
                let block = gamma
                    .view((rd.start, rs.start), (rd.len(), rs.len()))
                    .into_owned();
                let mapped = &block * &bases[src_i];
                for c in 0..mapped.ncols() {
                    let v = mapped.column(c).into_owned();
                    let m = CMat::from_column_slice(v.len(), 1, v.as_slice());
                    if append_vec(&mut bases[dst_i], &m, atol) {
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }
    let total: usize = bases.iter().map(|b| b.ncols()).sum();
    if total < space.dim() {
        Some(bases)
    } else {
        None
    }
}

/// Gram–Schmidt append: returns true when the vector enlarged the basis.
fn append_vec(basis: &mut CMat, v: &CMat, atol: f64) -> bool {
    if v.nrows() == 0 {
        return false;
    }
    let mut w = v.clone();
    for c in 0..basis.ncols() {
        let b = basis.column(c);
        let coeff: C = b.iter().zip(w.column(0).iter()).map(|(x, y)| x.conj() * y).sum();
        for r in 0..w.nrows() {
            let delta = basis[(r, c)] * coeff;
            w[(r, 0)] -= delta;
        }
    }
    let norm = w.column(0).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm <= atol {
        return false;
    }
    let mut grown = zeros(basis.nrows(), basis.ncols() + 1);
    grown.view_mut((0, 0), (basis.nrows(), basis.ncols())).copy_from(basis);
    for r in 0..w.nrows() {
        grown[(r, basis.ncols())] = w[(r, 0)] / cr(norm);
    }
    *basis = grown;
    true
}

/// Verify a reducibility witness: the per-node spans must be invariant
/// under every edge block and neither zero nor everything.
pub fn check_witness(space: &GradedSpace, phase: &PhasePoint, witness: &[CMat]) -> bool {
    let nodes = space.nodes();
    let total: usize = witness.iter().map(|b| b.ncols()).sum();
    if total == 0 || total >= space.dim() {
        return false;
    }
    let gamma = phase.matrix();
    let scale = linalg::max_abs(gamma).max(1.0);
    for (src_i, &(js, ks)) in nodes.iter().enumerate() {
        for (dst_i, &(jd, kd)) in nodes.iter().enumerate() {
            if js == jd {
                continue;
            }
            let rs = space.node_range(js, ks);
            let rd = space.node_range(jd, kd);
            let block = gamma
                .view((rd.start, rs.start), (rd.len(), rs.len()))
                .into_owned();
            let mapped = &block * &witness[src_i];
            // residual after projecting onto the destination span
            let proj = &witness[dst_i] * (witness[dst_i].adjoint() * &mapped);
            if linalg::max_abs(&(&mapped - &proj)) > 1e-7 * scale {
                return false;
            }
        }
    }
    true
}

/// The twisted representation identifying the phase space with a cotangent
/// bundle: along the chosen orientation `ρ'(e) = −φ(e) ρ(e)`, against it
/// `ρ'(ē) = ρ(ē)`.
#[derive(Debug, Clone)]
pub struct TwistedRep {
    /// edges of the orientation as flat node index pairs (tail, head)
    pub oriented_edges: Vec<((usize, usize), (usize, usize))>,
    /// twisted maps: `maps[e] = (rho'(e): tail→head, rho'(ē): head→tail)`
    pub maps: Vec<(CMat, CMat)>,
}

/// Twist a phase point (or any End(V)° matrix, e.g. a tangent vector) along
/// an orientation of the complete k-partite core.
pub fn cotangent_twist(
    space: &GradedSpace,
    fourier: &FourierConfig,
    value: &CMat,
    orientation: &[((usize, usize), (usize, usize))],
) -> Result<TwistedRep, PhaseError> {
    // every cross-part node pair must appear exactly once, in one direction
    let nodes = space.nodes();
    let mut expected = 0;
    for (i, &(ji, _)) in nodes.iter().enumerate() {
        for &(jj, _) in nodes.iter().skip(i + 1) {
            if ji != jj {
                expected += 1;
            }
        }
    }
    if orientation.len() != expected {
        return Err(PhaseError::IncompleteOrientation);
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(t, h) in orientation {
        if t.0 == h.0 || !seen.insert((t.min(h), t.max(h))) {
            return Err(PhaseError::IncompleteOrientation);
        }
    }
    let mut maps = Vec::with_capacity(orientation.len());
    for &(tail, head) in orientation {
        let rt = space.node_range(tail.0, tail.1);
        let rh = space.node_range(head.0, head.1);
        let fwd = value
            .view((rh.start, rt.start), (rh.len(), rt.len()))
            .into_owned();
        let bwd = value
            .view((rt.start, rh.start), (rt.len(), rh.len()))
            .into_owned();
        // coefficient of ρ(e) inside Ξ is φ_{head-part, tail-part}
        let phi = fourier.phi(head.0, tail.0);
        maps.push((fwd * (-phi), bwd));
    }
    Ok(TwistedRep {
        oriented_edges: orientation.to_vec(),
        maps,
    })
}

impl TwistedRep {
    /// Standard cotangent moment map at a node:
    /// `Σ_{t(e)=i} ρ'(ē)ρ'(e) − Σ_{h(e)=i} ρ'(e)ρ'(ē)` over oriented edges.
    pub fn moment_map(&self, space: &GradedSpace, node: (usize, usize)) -> CMat {
        let d = space.node_dim(node.0, node.1);
        let mut out = zeros(d, d);
        for (&(tail, head), (fwd, bwd)) in self.oriented_edges.iter().zip(&self.maps) {
            if tail == node {
                out += bwd * fwd;
            }
            if head == node {
                out -= fwd * bwd;
            }
        }
        out
    }

    /// The standard cotangent symplectic form between two twisted tangents.
    pub fn omega_standard(&self, other: &TwistedRep) -> C {
        let mut total = cr(0.0);
        for ((fwd_u, bwd_u), (fwd_v, bwd_v)) in self.maps.iter().zip(&other.maps) {
            total += linalg::trace(&(bwd_u * fwd_v)) - linalg::trace(&(bwd_v * fwd_u));
        }
        total
    }
}

/// Outcome of normalizing a matrix pencil `α∂ + βz − γ`.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub fourier: FourierConfig,
    pub space: GradedSpace,
    pub phase: PhasePoint,
    pub times: TimeConfig,
    /// change of basis S (columns = joint eigenbasis, canonically ordered)
    pub basis: CMat,
    /// block-diagonal left multiplier K with
    /// `α'λ + β'z − γ' = K · S⁻¹ (αλ + βz − γ) S`
    pub left: CMat,
}

const NORMALIZE_CLUSTER_RTOL: f64 = 1e-8;

/// Normalize a commuting diagonalizable pencil: group joint eigenspaces by
/// their point `[−β_i : α_i]` on the Fourier sphere (parts sorted by the
/// point, ∞ last; node eigenvalues sorted lexicographically), and fix the
/// left multiplication so the ∂-coefficient is the idempotent of `U_∞` and
/// the z-coefficient is `Id` on `W_∞` and `−A` elsewhere.
pub fn normalize(alpha: &CMat, beta: &CMat, gamma: &CMat) -> Result<Normalized, PhaseError> {
    let n = alpha.nrows();
    let scale = linalg::max_abs(alpha)
        .max(linalg::max_abs(beta))
        .max(1.0);
    let comm = linalg::max_abs(&linalg::commutator(alpha, beta));
    if comm > 1e-9 * scale * scale {
        return Err(PhaseError::NonCommuting(comm));
    }
    // joint eigenspaces: split by α, then refine by β
    let mut joint: Vec<(C, C, CMat)> = Vec::new();
    for (aval, abasis) in eigenspaces(alpha, scale)? {
        let brestr = linalg::pinv(&abasis) * beta * &abasis;
        let bscale = linalg::max_abs(beta).max(1.0);
        for (bval, bbasis) in eigenspaces(&brestr, bscale)? {
            joint.push((aval, bval, &abasis * &bbasis));
        }
    }
    let dim_sum: usize = joint.iter().map(|(_, _, b)| b.ncols()).sum();
    if dim_sum != n {
        return Err(PhaseError::NotDiagonalizable);
    }
    // assign points and group into parts
    let pair_scale: f64 = joint
        .iter()
        .map(|(a, b, _)| a.norm().max(b.norm()))
        .fold(0.0, f64::max)
        .max(1.0);
    let mut tagged: Vec<(FourierPoint, C, C, CMat)> = Vec::new();
    for (a, b, basis) in joint {
        if a.norm().max(b.norm()) <= 1e-10 * pair_scale {
            return Err(PhaseError::CommonKernel);
        }
        let point = if a.norm() <= 1e-12 * pair_scale {
            FourierPoint::Infinity
        } else {
            FourierPoint::Finite(-b / a)
        };
        tagged.push((point, a, b, basis));
    }
    // group by point (∞ together; finite within relative tolerance)
    let mut groups: Vec<(FourierPoint, Vec<usize>)> = Vec::new();
    let finite_scale = tagged
        .iter()
        .filter_map(|(p, _, _, _)| match p {
            FourierPoint::Finite(a) => Some(a.norm()),
            _ => None,
        })
        .fold(1.0, f64::max);
    for (idx, (p, _, _, _)) in tagged.iter().enumerate() {
        let hit = groups.iter_mut().find(|(gp, _)| match (gp, p) {
            (FourierPoint::Infinity, FourierPoint::Infinity) => true,
            (FourierPoint::Finite(x), FourierPoint::Finite(y)) => {
                (x - y).norm() <= NORMALIZE_CLUSTER_RTOL * finite_scale
            }
            _ => false,
        });
        match hit {
            Some((_, members)) => members.push(idx),
            None => groups.push((*p, vec![idx])),
        }
    }
    // canonical part order: finite points lexicographically, then ∞
    groups.sort_by(|(p, _), (q, _)| match (p, q) {
        (FourierPoint::Infinity, FourierPoint::Infinity) => std::cmp::Ordering::Equal,
        (FourierPoint::Infinity, _) => std::cmp::Ordering::Greater,
        (_, FourierPoint::Infinity) => std::cmp::Ordering::Less,
        (FourierPoint::Finite(x), FourierPoint::Finite(y)) => x
            .re
            .partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap()),
    });
    // assemble S0 and the per-column left multiplier
    let mut s0 = zeros(n, n);
    let mut kdiag = vec![cr(0.0); n];
    let mut col = 0;
    let mut part_dims = Vec::new();
    let mut points = Vec::new();
    for (point, members) in &groups {
        let mut width = 0;
        for &m in members {
            let (_, a, b, basis) = &tagged[m];
            let k = match point {
                FourierPoint::Infinity => cr(1.0) / b,
                FourierPoint::Finite(_) => cr(1.0) / a,
            };
            for c in 0..basis.ncols() {
                for r in 0..n {
                    s0[(r, col)] = basis[(r, c)];
                }
                kdiag[col] = k;
                col += 1;
                width += 1;
            }
        }
        part_dims.push(width);
        points.push(*point);
    }
    let s0_inv = linalg::inverse(&s0).ok_or(PhaseError::NotDiagonalizable)?;
    let k0 = CMat::from_diagonal(&crate::linalg::CVec::from_vec(kdiag));
    let gamma1 = &k0 * &s0_inv * gamma * &s0;
    // refine each part by the eigen-decomposition of its diagonal block
    let mut node_dims: Vec<Vec<usize>> = Vec::new();
    let mut times: Vec<Vec<C>> = Vec::new();
    let mut g_full = eye(n);
    let mut at = 0;
    for (j, &pd) in part_dims.iter().enumerate() {
        let block = gamma1.view((at, at), (pd, pd)).into_owned();
        let bscale = linalg::max_abs(&block).max(1.0);
        let decomp = eigenspaces(&block, bscale).map_err(|_| PhaseError::NonSemisimpleDiagonal(j))?;
        let total: usize = decomp.iter().map(|(_, b)| b.ncols()).sum();
        if total != pd {
            return Err(PhaseError::NonSemisimpleDiagonal(j));
        }
        let mut dims_here = Vec::new();
        let mut times_here = Vec::new();
        let mut gcols = Vec::new();
        let mut decomp = decomp;
        decomp.sort_by(|(x, _), (y, _)| {
            x.re.partial_cmp(&y.re)
                .unwrap()
                .then(x.im.partial_cmp(&y.im).unwrap())
        });
        for (val, basis) in decomp {
            dims_here.push(basis.ncols());
            times_here.push(val);
            gcols.push(basis);
        }
        let mut gj = zeros(pd, pd);
        let mut c0 = 0;
        for b in gcols {
            for c in 0..b.ncols() {
                for r in 0..pd {
                    gj[(r, c0)] = b[(r, c)];
                }
                c0 += 1;
            }
        }
        g_full.view_mut((at, at), (pd, pd)).copy_from(&gj);
        node_dims.push(dims_here);
        times.push(times_here);
        at += pd;
    }
    let g_inv = linalg::inverse(&g_full).ok_or(PhaseError::NotDiagonalizable)?;
    let gamma2 = &g_inv * &gamma1 * &g_full;
    let space = GradedSpace::new(node_dims);
    let fourier = FourierConfig::new(points)?;
    let times = TimeConfig::new(times)?;
    let phase = PhasePoint::new(&space, space.off_diagonal(&gamma2))?;
    Ok(Normalized {
        fourier,
        space,
        phase,
        times,
        basis: &s0 * &g_full,
        left: &g_inv * &k0 * &g_full,
    })
}

/// Eigen-decomposition into (eigenvalue, orthonormal eigenbasis) clusters;
/// fails when the geometric multiplicities fall short (not diagonalizable).
fn eigenspaces(m: &CMat, scale: f64) -> Result<Vec<(C, CMat)>, PhaseError> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut vals = linalg::eigenvalues(m);
    vals.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let mut clusters: Vec<(C, usize)> = Vec::new();
    for v in vals {
        match clusters.last_mut() {
            Some((s, count)) if (v - *s).norm() <= NORMALIZE_CLUSTER_RTOL * scale => {
                *s = (*s * cr(*count as f64) + v) / cr((*count + 1) as f64);
                *count += 1;
            }
            _ => clusters.push((v, 1)),
        }
    }
    let mut out = Vec::new();
    let mut covered = 0;
    for (val, mult) in clusters {
        let shifted = m - eye(n) * val;
        let basis = linalg::null_space_with(&shifted, NORMALIZE_CLUSTER_RTOL * scale);
        if basis.ncols() != mult {
            return Err(PhaseError::NotDiagonalizable);
        }
        covered += basis.ncols();
        out.push((val, basis));
    }
    if covered != n {
        return Err(PhaseError::NotDiagonalizable);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs};
    use crate::orbits::jordan_of_matrix;
    use crate::sampling;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn interval(d0: &[usize], dinf: &[usize]) -> (GradedSpace, FourierConfig) {
        let space = GradedSpace::new(vec![d0.to_vec(), dinf.to_vec()]);
        let fourier = FourierConfig::new(vec![
            FourierPoint::Finite(cr(0.0)),
            FourierPoint::Infinity,
        ])
        .unwrap();
        (space, fourier)
    }

    #[test]
    fn phi_constants() {
        let f = FourierConfig::new(vec![
            FourierPoint::Finite(cr(2.0)),
            FourierPoint::Finite(cr(-1.0)),
            FourierPoint::Infinity,
        ])
        .unwrap();
        assert_eq!(f.phi(0, 0), cr(0.0));
        assert_eq!(f.phi(0, 1), cr(1.0) / cr(3.0));
        assert_eq!(f.phi(1, 0), -f.phi(0, 1));
        assert_eq!(f.phi(0, 2), cr(1.0));
        assert_eq!(f.phi(2, 0), cr(-1.0));
    }

    #[test]
    fn xi_gamma_trace_vanishes() {
        let mut rng = StdRng::seed_from_u64(3);
        let cfg = sampling::random_config(3, 2, 2, true, 1.5, &mut rng);
        let xi = cfg.phase.xi(&cfg.space, &cfg.fourier);
        let tr = linalg::trace(&(&xi * cfg.phase.matrix()));
        assert!(tr.norm() < 1e-12 * (1.0 + max_abs(cfg.phase.matrix())).powi(2));
    }

    #[test]
    fn omega_is_antisymmetric_and_matches_qp_form_on_interval() {
        let mut rng = StdRng::seed_from_u64(5);
        let (space, fourier) = interval(&[2, 1], &[1, 2]);
        let u = sampling::random_tangent(&space, &mut rng, 1.0);
        let v = sampling::random_tangent(&space, &mut rng, 1.0);
        let ouv = omega(&space, &fourier, &u, &v).unwrap();
        let ovu = omega(&space, &fourier, &v, &u).unwrap();
        assert!((ouv + ovu).norm() < 1e-12);
        assert!(omega(&space, &fourier, &u, &u).unwrap().norm() < 1e-12);
        // on the interval: ω(u, v) = Tr(u_Q v_P) − Tr(v_Q u_P), where
        // Q: W_∞ → W_0 is the (0,1) part block and P the (1,0) one
        let r0 = space.part_range(0);
        let r1 = space.part_range(1);
        let block = |m: &CMat, ri: &std::ops::Range<usize>, rj: &std::ops::Range<usize>| {
            m.view((ri.start, rj.start), (ri.len(), rj.len())).into_owned()
        };
        let qp_form = linalg::trace(&(block(&u, &r0, &r1) * block(&v, &r1, &r0)))
            - linalg::trace(&(block(&v, &r0, &r1) * block(&u, &r1, &r0)));
        assert!((ouv - qp_form).norm() < 1e-12);
    }

    #[test]
    fn omega_nondegenerate_on_random_config() {
        let mut rng = StdRng::seed_from_u64(11);
        let cfg = sampling::random_config(3, 1, 2, false, 1.0, &mut rng);
        // Gram matrix of ω on the standard basis of End(V)° has full rank
        let parts = cfg.space.part_of_index();
        let mut coords = Vec::new();
        let n = cfg.space.dim();
        for r in 0..n {
            for cc in 0..n {
                if parts[r] != parts[cc] {
                    coords.push((r, cc));
                }
            }
        }
        let mut gram = zeros(coords.len(), coords.len());
        for (i, &(r1, c1)) in coords.iter().enumerate() {
            for (k, &(r2, c2)) in coords.iter().enumerate() {
                let mut e1 = zeros(n, n);
                e1[(r1, c1)] = cr(1.0);
                let mut e2 = zeros(n, n);
                e2[(r2, c2)] = cr(1.0);
                gram[(i, k)] = omega(&cfg.space, &cfg.fourier, &e1, &e2).unwrap();
            }
        }
        assert_eq!(linalg::rank(&gram), coords.len());
    }

    #[test]
    fn normalize_identity_alpha() {
        // α = Id, β = 0: every pair is (1, 0), a single part at a = 0
        let n = 3;
        let alpha = eye(n);
        let beta = zeros(n, n);
        let mut rng = StdRng::seed_from_u64(2);
        let gamma = sampling::random_matrix(&mut rng, n, n, 1.0)
            + sampling::random_matrix(&mut rng, n, n, 1.0);
        let got = normalize(&alpha, &beta, &gamma).unwrap();
        assert_eq!(got.fourier.part_count(), 1);
        assert_eq!(got.fourier.infinity_part(), None);
        assert_eq!(got.fourier.finite_value(0), Some(cr(0.0)));
    }

    #[test]
    fn normalize_two_parts() {
        // α = diag(0,1), β = diag(1,−a): J = {∞, a}
        let a = c(2.0, 0.5);
        let alpha = CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![cr(0.0), cr(1.0)]));
        let beta = CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![cr(1.0), -a]));
        let gamma = CMat::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.7, 0.1), c(-0.2, 0.4), c(1.1, 0.0)]);
        let got = normalize(&alpha, &beta, &gamma).unwrap();
        assert_eq!(got.fourier.part_count(), 2);
        assert_eq!(got.fourier.infinity_part(), Some(1));
        let av = got.fourier.finite_value(0).unwrap();
        assert!((av - a).norm() < 1e-10);
        // W_∞ is one-dimensional
        assert_eq!(got.space.part_dim(1), 1);
    }

    #[test]
    fn normalize_reassembly_identity() {
        // three ratio groups in dimension 4, nontrivial joint eigenbasis
        let mut rng = StdRng::seed_from_u64(17);
        let d_alpha = vec![cr(1.0), cr(1.0), cr(0.0), cr(2.0)];
        let d_beta = vec![cr(-2.0), cr(-2.0), cr(1.0), cr(2.0)];
        // points: 2, 2, ∞, −1 → parts {2 (dim 2), ∞ (dim 1), −1 (dim 1)}
        let s = loop {
            let cand = sampling::random_matrix(&mut rng, 4, 4, 1.0);
            if linalg::inverse(&cand).is_some() {
                break cand;
            }
        };
        let si = linalg::inverse(&s).unwrap();
        let alpha = &s * CMat::from_diagonal(&crate::linalg::CVec::from_vec(d_alpha)) * &si;
        let beta = &s * CMat::from_diagonal(&crate::linalg::CVec::from_vec(d_beta)) * &si;
        let gamma = sampling::random_matrix(&mut rng, 4, 4, 1.0);
        let got = normalize(&alpha, &beta, &gamma).unwrap();
        assert_eq!(got.fourier.part_count(), 3);
        assert_eq!(got.fourier.infinity_part(), Some(2));
        // α'λ + β'z − γ' = K S⁻¹ (αλ + βz − γ) S at sample (λ, z)
        let inf = got.fourier.infinity_part().unwrap();
        let mut alpha_out = eye(4);
        for idx in got.space.part_range(inf) {
            alpha_out[(idx, idx)] = cr(0.0);
        }
        let mut beta_out = -got.space.a_matrix(&got.fourier);
        for idx in got.space.part_range(inf) {
            beta_out[(idx, idx)] = cr(1.0);
        }
        let gamma_out = got.phase.matrix() + got.times.t_hat(&got.space);
        let sinv = linalg::inverse(&got.basis).unwrap();
        for (lam, z) in [(c(0.3, 0.8), c(-1.2, 0.1)), (c(2.0, 0.0), c(0.5, 0.5))] {
            let m_in = &alpha * lam + &beta * z - &gamma;
            let m_out = &alpha_out * lam + &beta_out * z - &gamma_out;
            let lhs = &got.left * &sinv * &m_in * &got.basis;
            assert!(max_abs(&(&lhs - &m_out)) < 1e-8 * (1.0 + max_abs(&m_out)));
        }
    }

    #[test]
    fn normalize_rejects_bad_inputs() {
        let mut rng = StdRng::seed_from_u64(23);
        let a = sampling::random_matrix(&mut rng, 2, 2, 1.0);
        let b = sampling::random_matrix(&mut rng, 2, 2, 1.0);
        let g = zeros(2, 2);
        assert!(matches!(
            normalize(&a, &b, &g),
            Err(PhaseError::NonCommuting(_))
        ));
        // common kernel: both kill e1
        let alpha = CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![cr(0.0), cr(1.0)]));
        let beta = CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![cr(0.0), cr(2.0)]));
        assert!(matches!(
            normalize(&alpha, &beta, &g),
            Err(PhaseError::CommonKernel)
        ));
    }

    #[test]
    fn sl2_identity_and_generators() {
        let mut rng = StdRng::seed_from_u64(31);
        let cfg = sampling::random_config(3, 2, 2, true, 1.0, &mut rng);
        let id = sl2_act(&Mobius::identity(), &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times).unwrap();
        assert_eq!(id.fourier, cfg.fourier);
        assert!(max_abs(&(id.phase.matrix() - cfg.phase.matrix())) < 1e-14);
        assert!(max_abs(&(&id.multiplier - eye(cfg.space.dim()))) < 1e-14);

        // scaling: a ↦ c²a, ε = diag(1/c on W_∞, c on U_∞)
        let c0 = c(1.3, -0.4);
        let img = sl2_act(&Mobius::scaling(c0), &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times).unwrap();
        for j in 0..cfg.fourier.part_count() {
            match (cfg.fourier.points()[j], img.fourier.points()[j]) {
                (FourierPoint::Finite(a), FourierPoint::Finite(b)) => {
                    assert!((b - c0 * c0 * a).norm() < 1e-10);
                }
                (FourierPoint::Infinity, FourierPoint::Infinity) => {}
                _ => panic!("scaling must not move parts to or from infinity"),
            }
        }
        let inf = cfg.fourier.infinity_part().unwrap();
        for j in 0..cfg.space.part_count() {
            let idx = cfg.space.part_range(j).start;
            let expect = if j == inf { cr(1.0) / c0 } else { c0 };
            assert!((img.multiplier[(idx, idx)] - expect).norm() < 1e-12);
        }

        // shear: a ↦ a − c, γ unchanged
        let img = sl2_act(&Mobius::shear(c0), &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times).unwrap();
        for j in 0..cfg.fourier.part_count() {
            match (cfg.fourier.points()[j], img.fourier.points()[j]) {
                (FourierPoint::Finite(a), FourierPoint::Finite(b)) => {
                    assert!((b - (a - c0)).norm() < 1e-10);
                }
                (FourierPoint::Infinity, FourierPoint::Infinity) => {}
                _ => panic!("shear fixes infinity"),
            }
        }
        assert!(max_abs(&(img.phase.matrix() - cfg.phase.matrix())) < 1e-12);
    }

    #[test]
    fn fourier_laplace_is_harnad_permutation_on_interval() {
        let mut rng = StdRng::seed_from_u64(37);
        let cfg = sampling::jmms_config(&[2, 1], &[1, 2], 1.0, &mut rng);
        let img = sl2_act(&Mobius::fourier_laplace(), &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times).unwrap();
        // part 0 (at 0) moves to ∞, part 1 (at ∞) moves to 0
        assert!(img.fourier.points()[0].is_infinity());
        assert_eq!(img.fourier.finite_value(1), Some(cr(0.0)));
        // Γ' = εΓ with ε = +1 on W_0, −1 on W_∞:
        // new Q (block 1←0 after the role swap) = −P, new P (block 0←1) = Q
        let r0 = cfg.space.part_range(0);
        let r1 = cfg.space.part_range(1);
        let before_q = cfg.phase.matrix().view((r0.start, r1.start), (r0.len(), r1.len())).into_owned();
        let before_p = cfg.phase.matrix().view((r1.start, r0.start), (r1.len(), r0.len())).into_owned();
        let after_block_10 = img.phase.matrix().view((r1.start, r0.start), (r1.len(), r0.len())).into_owned();
        let after_block_01 = img.phase.matrix().view((r0.start, r1.start), (r0.len(), r1.len())).into_owned();
        assert!(max_abs(&(&after_block_10 + &before_p)) < 1e-12, "new Q = -P");
        assert!(max_abs(&(&after_block_01 - &before_q)) < 1e-12, "new P = Q");
        // times: new T_∞ (= part 0 values) = T_0, new T_0 (= part 1 values) = −T_∞
        for (t_new, t_old) in img.times.values()[0].iter().zip(&cfg.times.values()[0]) {
            assert!((t_new - t_old).norm() < 1e-12);
        }
        for (t_new, t_old) in img.times.values()[1].iter().zip(&cfg.times.values()[1]) {
            assert!((t_new + t_old).norm() < 1e-12);
        }
    }

    #[test]
    fn omega_equivariance_and_round_trip() {
        let mut rng = StdRng::seed_from_u64(41);
        for trial in 0..25 {
            let with_inf = trial % 2 == 0;
            let cfg = sampling::random_config(3, 2, 2, with_inf, 1.0, &mut rng);
            let g = sampling::random_mobius(&mut rng);
            let img = match sl2_act(&g, &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times) {
                Ok(i) => i,
                Err(_) => continue,
            };
            let u = sampling::random_tangent(&cfg.space, &mut rng, 1.0);
            let v = sampling::random_tangent(&cfg.space, &mut rng, 1.0);
            let before = omega(&cfg.space, &cfg.fourier, &u, &v).unwrap();
            let gu = &img.multiplier * &u;
            let gv = &img.multiplier * &v;
            let after = omega(&cfg.space, &img.fourier, &gu, &gv).unwrap();
            let scale = before.norm().max(1.0);
            assert!(
                (after - before).norm() < 1e-10 * scale,
                "equivariance failed at trial {trial}: {before} vs {after}"
            );
            // round trip, with the tolerance following the intermediate
            // magnitude (a part passing near ∞ scales Γ by a large ε)
            let back = sl2_act(&g.inverse(), &cfg.space, &img.fourier, &img.phase, &img.times).unwrap();
            let blow = 1.0 + max_abs(img.phase.matrix());
            let diff = max_abs(&(back.phase.matrix() - cfg.phase.matrix()));
            assert!(
                diff < 1e-10 * blow,
                "trial {trial}: diff {diff:.3e} blow {blow:.3e} mult {:?}",
                img.multiplier.diagonal().as_slice().iter().map(|x| x.norm()).collect::<Vec<_>>()
            );
            for (pa, pb) in back.fourier.points().iter().zip(cfg.fourier.points()) {
                match (pa, pb) {
                    (FourierPoint::Infinity, FourierPoint::Infinity) => {}
                    (FourierPoint::Finite(x), FourierPoint::Finite(y)) => {
                        assert!((x - y).norm() < 1e-9)
                    }
                    _ => panic!("round trip changed the part structure"),
                }
            }
        }
    }

    #[test]
    fn residues_basics() {
        let mut rng = StdRng::seed_from_u64(43);
        let cfg = sampling::random_config(3, 2, 2, true, 1.0, &mut rng);
        // Γ = 0 gives vanishing residues
        let zero = PhasePoint::zero(&cfg.space);
        let res0 = residues(&cfg.space, &cfg.fourier, &zero);
        for r in &res0.r {
            assert!(max_abs(r) < 1e-15);
        }
        // trace identity Σ Tr Λ_i = 0
        let res = residues(&cfg.space, &cfg.fourier, &cfg.phase);
        let total: C = res.lambda.iter().map(linalg::trace).sum();
        assert!(total.norm() < 1e-12 * (1.0 + max_abs(cfg.phase.matrix())).powi(2));
    }

    #[test]
    fn residues_match_schlesinger_pattern() {
        // J = {0, ∞}: R_i = Q Id_i P as maps on W_0
        let mut rng = StdRng::seed_from_u64(47);
        let cfg = sampling::jmms_config(&[2], &[1, 1], 1.0, &mut rng);
        let res = residues(&cfg.space, &cfg.fourier, &cfg.phase);
        let r0 = cfg.space.part_range(0);
        let r1 = cfg.space.part_range(1);
        let q = cfg.phase.matrix().view((r0.start, r1.start), (r0.len(), r1.len())).into_owned();
        let p = cfg.phase.matrix().view((r1.start, r0.start), (r1.len(), r0.len())).into_owned();
        // nodes of the ∞ part are listed after the finite part's nodes
        let finite_nodes = cfg.space.node_dims()[0].len();
        for (k, &(j, kk)) in res.nodes.iter().enumerate() {
            if j != 1 {
                continue;
            }
            let cols = cfg.space.node_range(1, kk);
            let local = cols.start - r1.start..cols.end - r1.start;
            let qi = q.columns(local.start, local.len()).into_owned();
            let pi = p.rows(local.start, local.len()).into_owned();
            let expected = &qi * &pi;
            assert!(max_abs(&(&res.r[k] - &expected)) < 1e-12);
            let _ = finite_nodes;
        }
    }

    #[test]
    fn sl2_preserves_lambda_and_r_orbits() {
        let mut rng = StdRng::seed_from_u64(53);
        let cfg = sampling::random_config(2, 2, 2, true, 1.0, &mut rng);
        let g = sampling::random_mobius(&mut rng);
        let img = sl2_act(&g, &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times).unwrap();
        let before = residues(&cfg.space, &cfg.fourier, &cfg.phase);
        let after = residues(&cfg.space, &img.fourier, &img.phase);
        for k in 0..before.lambda.len() {
            assert!(
                max_abs(&(&before.lambda[k] - &after.lambda[k])) < 1e-10,
                "Λ_{k} changed under the SL2 action"
            );
            // R_i stays in its adjoint orbit: compare trace powers
            for pw in 1..=before.r[k].nrows() {
                let t1 = linalg::trace(&linalg::mat_pow(&before.r[k], pw));
                let t2 = linalg::trace(&linalg::mat_pow(&after.r[k], pw));
                assert!((t1 - t2).norm() < 1e-9 * (1.0 + t1.norm()));
            }
            assert_eq!(
                jordan_of_matrix(&before.r[k], 1e-5).blocks().len(),
                jordan_of_matrix(&after.r[k], 1e-5).blocks().len()
            );
        }
    }

    #[test]
    fn connection_matrix_shapes() {
        let mut rng = StdRng::seed_from_u64(59);
        let cfg = sampling::random_config(3, 2, 2, true, 1.0, &mut rng);
        let inf = cfg.fourier.infinity_part().unwrap();
        // Γ = 0 → Az + T on U_∞
        let zero = PhasePoint::zero(&cfg.space);
        let z = c(0.37, 0.21);
        let got = connection_matrix(&cfg.space, &cfg.fourier, &zero, &cfg.times, z).unwrap();
        let expected = cfg.space.compress(&cfg.space.a_matrix(&cfg.fourier), inf) * z
            + cfg.space.compress(&cfg.times.t_hat(&cfg.space), inf);
        assert!(max_abs(&(&got - &expected)) < 1e-12);

        // the residue at t_i equals R_i: (z − t_i)·B(z) → R_i as z → t_i
        let res = residues(&cfg.space, &cfg.fourier, &cfg.phase);
        let nodes = cfg.space.nodes();
        for (k, &(j, kk)) in nodes.iter().enumerate() {
            if j != inf {
                continue;
            }
            let t = cfg.times.value(j, kk);
            let h = 1e-6;
            let zs = t + c(h, 0.0);
            let b = connection_matrix(&cfg.space, &cfg.fourier, &cfg.phase, &cfg.times, zs).unwrap();
            let approx = &b * c(h, 0.0);
            // remove the regular part: approx − h·(regular stuff) ≈ R_i + O(h)
            assert!(
                max_abs(&(&approx - &res.r[k])) < 1e-4,
                "residue limit failed at node {k}"
            );
        }
        // pole evaluation errors out
        let t0 = cfg.times.value(inf, 0);
        assert!(matches!(
            connection_matrix(&cfg.space, &cfg.fourier, &cfg.phase, &cfg.times, t0),
            Err(PhaseError::PoleEvaluation(_))
        ));
    }

    #[test]
    fn stability_detects_reducible_and_generic() {
        let mut rng = StdRng::seed_from_u64(61);
        // Γ = 0 with at least two nonzero nodes is reducible
        let space = GradedSpace::new(vec![vec![1], vec![1], vec![1]]);
        let zero = PhasePoint::zero(&space);
        match is_stable(&space, &zero, 4, 7) {
            Stability::Reducible { witness } => assert!(check_witness(&space, &zero, &witness)),
            _ => panic!("zero representation must be reducible"),
        }
        // generic triangle with d = (1,1,1) is irreducible
        let phase = sampling::random_phase(&space, &mut rng, 1.0);
        assert!(matches!(
            is_stable(&space, &phase, 16, 11),
            Stability::ProbablyIrreducible
        ));
        // constructed invariant flag
        let space2 = GradedSpace::new(vec![vec![2], vec![2]]);
        let tri = sampling::upper_triangular_phase(&space2, &mut rng, 1.0);
        match is_stable(&space2, &tri, 8, 13) {
            Stability::Reducible { witness } => {
                assert!(check_witness(&space2, &tri, &witness));
            }
            _ => panic!("upper triangular representation must be reducible"),
        }
    }

    #[test]
    fn cotangent_twist_interval_and_moment_maps() {
        let mut rng = StdRng::seed_from_u64(67);
        // interval with the edge oriented 0 → ∞ and φ = ±1: sign flip only
        let (space, fourier) = interval(&[2], &[2]);
        let phase = sampling::random_phase(&space, &mut rng, 1.0);
        let tw = cotangent_twist(&space, &fourier, phase.matrix(), &[((0, 0), (1, 0))]).unwrap();
        // ρ(e): V_(0,0) → V_(1,0) is the P-block; coefficient in Ξ is φ_{∞,0} = −1
        let r0 = space.part_range(0);
        let r1 = space.part_range(1);
        let p_block = phase.matrix().view((r1.start, r0.start), (r1.len(), r0.len())).into_owned();
        assert!(max_abs(&(&tw.maps[0].0 - &p_block)) < 1e-14, "−φ = +1: ρ' = ρ");

        // moment map matches Λ_i on a triangle
        let space3 = GradedSpace::new(vec![vec![2], vec![1], vec![2]]);
        let fourier3 = FourierConfig::new(vec![
            FourierPoint::Finite(cr(0.0)),
            FourierPoint::Finite(cr(1.0)),
            FourierPoint::Finite(c(0.0, 1.0)),
        ])
        .unwrap();
        let phase3 = sampling::random_phase(&space3, &mut rng, 1.0);
        let orient = vec![((0, 0), (1, 0)), ((0, 0), (2, 0)), ((1, 0), (2, 0))];
        let tw3 = cotangent_twist(&space3, &fourier3, phase3.matrix(), &orient).unwrap();
        let res = residues(&space3, &fourier3, &phase3);
        for (k, &node) in res.nodes.iter().enumerate() {
            let mu = tw3.moment_map(&space3, node);
            assert!(
                max_abs(&(&mu - &res.lambda[k])) < 1e-12,
                "moment map mismatch at node {k}"
            );
        }
        // ω agreement on random tangents
        let u = sampling::random_tangent(&space3, &mut rng, 1.0);
        let v = sampling::random_tangent(&space3, &mut rng, 1.0);
        let tu = cotangent_twist(&space3, &fourier3, &u, &orient).unwrap();
        let tv = cotangent_twist(&space3, &fourier3, &v, &orient).unwrap();
        let std_form = tu.omega_standard(&tv);
        let ours = omega(&space3, &fourier3, &u, &v).unwrap();
        assert!((std_form - ours).norm() < 1e-12);

        // incomplete orientation rejected
        assert!(matches!(
            cotangent_twist(&space3, &fourier3, phase3.matrix(), &orient[..2]),
            Err(PhaseError::IncompleteOrientation)
        ));
    }
}
