//! Adjoint-orbit combinatorics: Jordan data, markings, leg realizations and
//! the rank-shift duality between the products QP and PQ.
//!
//! Orbits are represented by their Jordan type — a partition for each
//! eigenvalue — not by matrices. Matrices only appear in [`realize_leg`] and
//! in the oracle helpers used by tests and the verification suites.

use crate::linalg::{self, cr, eye, zeros, CMat, C};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OrbitError {
    #[error("partition {0:?} is not weakly decreasing and positive")]
    BadPartition(Vec<usize>),
    #[error("marking {0:?} does not annihilate the orbit")]
    InvalidMarking(Vec<C>),
    #[error("target dimension {target} cannot host the added column: need at least {min}")]
    TargetTooSmall { target: usize, min: usize },
}

/// Tolerance for grouping floating-point spectra into Jordan data.
pub const EIGENVALUE_GROUP_TOL: f64 = 1e-10;

/// A Jordan type: one weakly decreasing partition per eigenvalue, stored
/// sorted by eigenvalue (lexicographically on `(re, im)`) so equal orbits
/// compare equal. Equality matches partitions exactly and eigenvalues within
/// [`EIGENVALUE_GROUP_TOL`], the same tolerance used to group spectra.
#[derive(Debug, Clone)]
pub struct JordanData {
    blocks: Vec<(C, Vec<usize>)>,
    dim: usize,
}

impl PartialEq for JordanData {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|((s, p), (t, q))| (s - t).norm() <= EIGENVALUE_GROUP_TOL && p == q)
    }
}

fn lex(a: &C, b: &C) -> std::cmp::Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap()
        .then(a.im.partial_cmp(&b.im).unwrap())
}

fn blocks_dim(blocks: &[(C, Vec<usize>)]) -> usize {
    blocks
        .iter()
        .map(|(_, p)| p.iter().sum::<usize>())
        .sum::<usize>()
}

impl JordanData {
    pub fn new(blocks: Vec<(C, Vec<usize>)>) -> Result<Self, OrbitError> {
        for (_, parts) in &blocks {
            if parts.is_empty() || parts.windows(2).any(|w| w[0] < w[1]) || parts.contains(&0) {
                return Err(OrbitError::BadPartition(parts.clone()));
            }
        }
        let mut blocks = blocks;
        blocks.sort_by(|a, b| lex(&a.0, &b.0));
        Ok(JordanData {
            dim: blocks_dim(&blocks),
            blocks,
        })
    }

    pub fn empty() -> Self {
        JordanData {
            blocks: Vec::new(),
            dim: 0,
        }
    }

    /// Semisimple orbit from a plain eigenvalue list, grouping within
    /// `EIGENVALUE_GROUP_TOL`.
    pub fn semisimple(eigenvalues: &[C]) -> Self {
        let mut vals: Vec<C> = eigenvalues.to_vec();
        vals.sort_by(lex);
        let mut blocks: Vec<(C, Vec<usize>)> = Vec::new();
        for v in vals {
            match blocks.last_mut() {
                Some((s, parts)) if (v - *s).norm() <= EIGENVALUE_GROUP_TOL => parts.push(1),
                _ => blocks.push((v, vec![1])),
            }
        }
        JordanData {
            dim: blocks_dim(&blocks),
            blocks,
        }
    }

    pub fn scalar(value: C, n: usize) -> Self {
        if n == 0 {
            return Self::empty();
        }
        JordanData {
            blocks: vec![(value, vec![1; n])],
            dim: n,
        }
    }

    pub fn nilpotent(partition: Vec<usize>) -> Result<Self, OrbitError> {
        Self::new(vec![(cr(0.0), partition)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[(C, Vec<usize>)] {
        &self.blocks
    }

    pub fn eigenvalues(&self) -> Vec<C> {
        self.blocks.iter().map(|(s, _)| *s).collect()
    }

    fn partition_of(&self, s: C, tol: f64) -> Option<&Vec<usize>> {
        self.blocks
            .iter()
            .find(|(v, _)| (v - s).norm() <= tol)
            .map(|(_, p)| p)
    }

    /// A representative in Jordan normal form (upper bidiagonal).
    pub fn representative(&self) -> CMat {
        let mut m = zeros(self.dim, self.dim);
        let mut at = 0;
        for (s, parts) in &self.blocks {
            for &p in parts {
                for k in 0..p {
                    m[(at + k, at + k)] = *s;
                    if k + 1 < p {
                        m[(at + k, at + k + 1)] = cr(1.0);
                    }
                }
                at += p;
            }
        }
        m
    }

    /// Shift the whole spectrum by `c`.
    pub fn shifted(&self, c: C) -> Self {
        let mut blocks: Vec<(C, Vec<usize>)> = self
            .blocks
            .iter()
            .map(|(s, p)| (*s + c, p.clone()))
            .collect();
        blocks.sort_by(|a, b| lex(&a.0, &b.0));
        JordanData {
            blocks,
            dim: self.dim,
        }
    }

    /// rank Π_l (A − ξ_l) for any representative A, computed combinatorially:
    /// on the generalized eigenspace of `s` each factor with `ξ_l = s` knocks
    /// one box off every row of the partition, other factors are invertible
    /// there.
    pub fn rank_of_product(&self, xis: &[C], tol: f64) -> usize {
        let mut total = 0;
        for (s, parts) in &self.blocks {
            let hits = xis.iter().filter(|x| (*x - s).norm() <= tol).count();
            total += parts.iter().map(|&p| p.saturating_sub(hits)).sum::<usize>();
        }
        total
    }
}

/// Jordan type of an explicit matrix: eigenvalues are clustered within
/// `cluster_tol`, partitions come from the rank sequence of powers of
/// `(m − s)`.
pub fn jordan_of_matrix(m: &CMat, cluster_tol: f64) -> JordanData {
    let n = m.nrows();
    if n == 0 {
        return JordanData::empty();
    }
    let mut vals = linalg::eigenvalues(m);
    vals.sort_by(lex);
    let mut clusters: Vec<(C, usize)> = Vec::new();
    for v in vals {
        match clusters.last_mut() {
            Some((s, count)) if (v - *s).norm() <= cluster_tol => {
                *s = (*s * cr(*count as f64) + v) / cr((*count + 1) as f64);
                *count += 1;
            }
            _ => clusters.push((v, 1)),
        }
    }
    let mut blocks = Vec::new();
    for (s, mult) in clusters {
        let shifted = m - eye(n) * s;
        // ranks[j] = rank (m-s)^j with an absolute cutoff at the data scale
        // (powers of a numerically-zero matrix must not count as full rank),
        // clamped so other eigenvalues stay full rank
        let scale = (linalg::max_abs(m) + s.norm()).max(1.0);
        let mut ranks = vec![n];
        let mut pw = eye(n);
        let mut atol = 1.0;
        loop {
            pw = &pw * &shifted;
            atol *= scale;
            let r = linalg::rank_with(&pw, linalg::RANK_RTOL * atol).max(n - mult);
            ranks.push(r);
            if ranks[ranks.len() - 2] == r {
                ranks.pop();
                break;
            }
        }
        // column lengths of the partition are the rank drops
        let mut parts: Vec<usize> = Vec::new();
        for j in 1..ranks.len() {
            let col = ranks[j - 1] - ranks[j];
            while parts.len() < col {
                parts.push(0);
            }
            for p in parts.iter_mut().take(col) {
                *p += 1;
            }
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        if !parts.is_empty() {
            blocks.push((s, parts));
        }
    }
    blocks.sort_by(|a, b| lex(&a.0, &b.0));
    JordanData {
        dim: blocks_dim(&blocks),
        blocks,
    }
}

/// Ordered annihilating roots `(ξ_1, …, ξ_w)` of an adjoint orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Marking(pub Vec<C>);

impl Marking {
    /// Whether `Π (A − ξ_l) = 0` on the orbit: every eigenvalue must be hit
    /// at least as many times as its largest Jordan block.
    pub fn annihilates(&self, orbit: &JordanData, tol: f64) -> bool {
        orbit.blocks().iter().all(|(s, parts)| {
            let hits = self.0.iter().filter(|x| (*x - s).norm() <= tol).count();
            hits >= parts.first().copied().unwrap_or(0)
        })
    }

    /// The minimal marking of an orbit: its distinct eigenvalues, each
    /// repeated to the size of its largest Jordan block, in the canonical
    /// (lexicographic) eigenvalue order.
    pub fn minimal(orbit: &JordanData) -> Self {
        let mut xis = Vec::new();
        for (s, parts) in orbit.blocks() {
            for _ in 0..parts.first().copied().unwrap_or(0) {
                xis.push(*s);
            }
        }
        Marking(xis)
    }

    pub fn is_special(&self) -> bool {
        self.0.first().map_or(false, |x| x.norm() == 0.0)
    }
}

/// Leg parameters from a marked orbit: `λ_i = ξ_i − ξ_{i−1}` (with
/// `λ_1 = ξ_1`) and `d_i = rank (A − ξ_1)···(A − ξ_{i−1})` (so `d_1 = n`).
pub fn marking_to_lambda_d(
    orbit: &JordanData,
    marking: &Marking,
) -> Result<(Vec<C>, Vec<usize>), OrbitError> {
    if !marking.annihilates(orbit, EIGENVALUE_GROUP_TOL) {
        return Err(OrbitError::InvalidMarking(marking.0.clone()));
    }
    let w = marking.0.len();
    let mut lambdas = Vec::with_capacity(w);
    let mut dims = Vec::with_capacity(w);
    let mut prev = cr(0.0);
    for i in 0..w {
        lambdas.push(marking.0[i] - prev);
        prev = marking.0[i];
        dims.push(orbit.rank_of_product(&marking.0[..i], EIGENVALUE_GROUP_TOL));
    }
    Ok((lambdas, dims))
}

/// An explicit representation of the type-A leg encoding a marked orbit:
/// maps `p_j : V_j → V_{j+1}` (surjective) and `q_j : V_{j+1} → V_j`
/// (injective) with endpoint `Λ ∈ End(V_1)` in the prescribed orbit.
#[derive(Debug, Clone)]
pub struct LegRealization {
    pub p: Vec<CMat>,
    pub q: Vec<CMat>,
    pub endpoint: CMat,
    pub lambdas: Vec<C>,
    pub dims: Vec<usize>,
}

/// Build the chain `p_j = (Λ − ξ_j)|_{V_j}`, `V_{j+1} = Im(p_j)`, `q_j` the
/// inclusion, starting from the Jordan representative of the orbit.
pub fn realize_leg(orbit: &JordanData, marking: &Marking) -> Result<LegRealization, OrbitError> {
    let (lambdas, dims) = marking_to_lambda_d(orbit, marking)?;
    let lam = orbit.representative();
    let n = orbit.dim();
    // frames[j]: n×d_{j+1} matrix whose columns frame V_{j+1} inside C^n
    let mut frames = vec![eye(n)];
    let mut p = Vec::new();
    let mut q = Vec::new();
    let edge_count = marking.0.len().saturating_sub(1);
    let scale = (linalg::max_abs(&lam) + marking.0.iter().map(|x| x.norm()).fold(0.0, f64::max))
        .max(1.0);
    for (j, &xi) in marking.0[..edge_count].iter().enumerate() {
        let cur = &frames[j];
        let mapped = (&lam - eye(n) * xi) * cur; // (Λ − ξ_j) on V_j in ambient coords
        let next = linalg::column_space_with(&mapped, linalg::RANK_RTOL * scale);
        if next.ncols() != dims[j + 1] {
            return Err(OrbitError::InvalidMarking(marking.0.clone()));
        }
        p.push(next.adjoint() * &mapped);
        // inclusion V_{j+1} ⊂ V_j expressed in the frames: solve cur · q = next
        q.push(linalg::pinv(cur) * &next);
        frames.push(next);
    }
    Ok(LegRealization {
        p,
        q,
        endpoint: lam,
        lambdas,
        dims,
    })
}

impl LegRealization {
    /// Residuals of the moment-map chain: `Λ − q_1 p_1 − λ_1`, then
    /// `p_j q_j − q_{j+1} p_{j+1} − λ_{j+1}`, and finally `p_l q_l − λ_w`.
    pub fn moment_residuals(&self) -> Vec<f64> {
        let l = self.p.len();
        if l == 0 {
            return vec![linalg::max_abs(
                &(&self.endpoint - eye(self.dims[0]) * self.lambdas[0]),
            )];
        }
        let mut out = vec![linalg::max_abs(
            &(&self.endpoint - &self.q[0] * &self.p[0] - eye(self.dims[0]) * self.lambdas[0]),
        )];
        for j in 0..l - 1 {
            out.push(linalg::max_abs(
                &(&self.p[j] * &self.q[j]
                    - &self.q[j + 1] * &self.p[j + 1]
                    - eye(self.dims[j + 1]) * self.lambdas[j + 1]),
            ));
        }
        out.push(linalg::max_abs(
            &(&self.p[l - 1] * &self.q[l - 1] - eye(self.dims[l]) * self.lambdas[l]),
        ));
        out
    }
}

/// Jordan type of `PQ` given the type of `QP`, for `P` surjective and `Q`
/// injective: nonzero eigenvalues keep their partitions, the nilpotent
/// partition loses its longest column (every part drops by one).
pub fn contract_orbit(qp: &JordanData) -> JordanData {
    let mut blocks = Vec::new();
    for (s, parts) in qp.blocks() {
        if s.norm() <= EIGENVALUE_GROUP_TOL {
            let reduced: Vec<usize> = parts.iter().map(|&p| p - 1).filter(|&p| p > 0).collect();
            if !reduced.is_empty() {
                blocks.push((cr(0.0), reduced));
            }
        } else {
            blocks.push((*s, parts.clone()));
        }
    }
    JordanData {
        dim: blocks_dim(&blocks),
        blocks,
    }
}

/// Inverse of [`contract_orbit`]: add back a column of length
/// `target_dim − dim` to the nilpotent Young diagram.
pub fn expand_orbit(pq: &JordanData, target_dim: usize) -> Result<JordanData, OrbitError> {
    let column = target_dim
        .checked_sub(pq.dim())
        .ok_or(OrbitError::TargetTooSmall {
            target: target_dim,
            min: pq.dim(),
        })?;
    let zero_parts = pq
        .partition_of(cr(0.0), EIGENVALUE_GROUP_TOL)
        .cloned()
        .unwrap_or_default();
    if column < zero_parts.len() {
        // the added column must be the longest one
        return Err(OrbitError::TargetTooSmall {
            target: target_dim,
            min: pq.dim() + zero_parts.len(),
        });
    }
    let mut blocks: Vec<(C, Vec<usize>)> = pq
        .blocks()
        .iter()
        .filter(|(s, _)| s.norm() > EIGENVALUE_GROUP_TOL)
        .cloned()
        .collect();
    if column > 0 {
        let mut parts: Vec<usize> = zero_parts.iter().map(|&p| p + 1).collect();
        parts.extend(std::iter::repeat(1).take(column - zero_parts.len()));
        blocks.push((cr(0.0), parts));
    } else if !zero_parts.is_empty() {
        blocks.push((cr(0.0), zero_parts));
    }
    blocks.sort_by(|a, b| lex(&a.0, &b.0));
    Ok(JordanData {
        dim: blocks_dim(&blocks),
        blocks,
    })
}

/// Special marking `(0, −ξ_1, …, −ξ_w)` of the R-orbit attached to the
/// marking `(ξ_1, …, ξ_w)` of a Λ-orbit.
pub fn specialize_marking(marking: &Marking) -> Marking {
    let mut xis = vec![cr(0.0)];
    xis.extend(marking.0.iter().map(|x| -x));
    Marking(xis)
}

/// Shift each pole orbit by `c_i` and the residual orbit at infinity by
/// `Σ c_i`.
pub fn scalar_shift(
    pole_orbits: &[JordanData],
    residual_orbit: &JordanData,
    shifts: &[C],
) -> (Vec<JordanData>, JordanData) {
    let total: C = shifts.iter().sum();
    let shifted = pole_orbits
        .iter()
        .zip(shifts)
        .map(|(o, &c)| o.shifted(c))
        .collect();
    (shifted, residual_orbit.shifted(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs, rank};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn semisimple(vals: &[f64]) -> JordanData {
        JordanData::semisimple(&vals.iter().map(|&v| cr(v)).collect::<Vec<_>>())
    }

    #[test]
    fn marking_to_lambda_d_examples() {
        // zero orbit with marking (0)
        let zero = JordanData::scalar(cr(0.0), 3);
        let (lam, d) = marking_to_lambda_d(&zero, &Marking(vec![cr(0.0)])).unwrap();
        assert_eq!(lam, vec![cr(0.0)]);
        assert_eq!(d, vec![3]);

        // {2,2,5} with marking (2,5): rank(A-2) = 1
        let o = semisimple(&[2.0, 2.0, 5.0]);
        let (lam, d) = marking_to_lambda_d(&o, &Marking(vec![cr(2.0), cr(5.0)])).unwrap();
        assert_eq!(lam, vec![cr(2.0), cr(3.0)]);
        assert_eq!(d, vec![3, 1]);
        let a = o.representative();
        assert_eq!(rank(&(&a - eye(3) * cr(2.0))), 1);

        // {2,2,2,5} with marking (2,5)
        let o = semisimple(&[2.0, 2.0, 2.0, 5.0]);
        let (lam, d) = marking_to_lambda_d(&o, &Marking(vec![cr(2.0), cr(5.0)])).unwrap();
        assert_eq!(lam, vec![cr(2.0), cr(3.0)]);
        assert_eq!(d, vec![4, 1]);
    }

    #[test]
    fn marking_must_annihilate() {
        let o = semisimple(&[2.0, 5.0]);
        assert!(matches!(
            marking_to_lambda_d(&o, &Marking(vec![cr(2.0)])),
            Err(OrbitError::InvalidMarking(_))
        ));
    }

    #[test]
    fn dims_weakly_decreasing_and_first_is_n() {
        let o = JordanData::new(vec![(cr(1.0), vec![2, 1]), (cr(4.0), vec![2])]).unwrap();
        let marking = Marking::minimal(&o);
        let (_, d) = marking_to_lambda_d(&o, &marking).unwrap();
        assert_eq!(d[0], o.dim());
        assert!(d.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn realize_leg_semisimple() {
        let o = semisimple(&[2.0, 2.0, 5.0]);
        let real = realize_leg(&o, &Marking(vec![cr(2.0), cr(5.0)])).unwrap();
        assert_eq!(real.dims, vec![3, 1]);
        assert!(real.moment_residuals().iter().all(|&r| r < 1e-10));
        assert_eq!(rank(&real.p[0]), 1);
        assert_eq!(rank(&real.q[0]), 1);
        assert_eq!(jordan_of_matrix(&real.endpoint, 1e-6), o);
    }

    #[test]
    fn realize_leg_nilpotent() {
        let o = JordanData::nilpotent(vec![2]).unwrap();
        let real = realize_leg(&o, &Marking(vec![cr(0.0), cr(0.0)])).unwrap();
        assert_eq!(real.dims, vec![2, 1]);
        assert_eq!(rank(&real.endpoint), 1);
        assert!(max_abs(&(&real.endpoint * &real.endpoint)) < 1e-12);
        assert!(real.moment_residuals().iter().all(|&r| r < 1e-10));
    }

    #[test]
    fn realize_leg_scalar() {
        let o = JordanData::scalar(cr(3.5), 2);
        let real = realize_leg(&o, &Marking(vec![cr(3.5)])).unwrap();
        assert!(real.p.is_empty());
        assert!(max_abs(&(&real.endpoint - eye(2) * cr(3.5))) < 1e-12);
        assert!(real.moment_residuals()[0] < 1e-12);
    }

    #[test]
    fn contract_examples() {
        // π₀ = (2,2,1) in gl5 → (1,1) in gl2
        let o = JordanData::nilpotent(vec![2, 2, 1]).unwrap();
        let c0 = contract_orbit(&o);
        assert_eq!(c0, JordanData::nilpotent(vec![1, 1]).unwrap());
        assert_eq!(c0.dim(), 2);

        // J2 → zero in gl1
        let o = JordanData::nilpotent(vec![2]).unwrap();
        assert_eq!(contract_orbit(&o), JordanData::scalar(cr(0.0), 1));

        // {3, 0} → (3) in gl1, and PQ = Tr QP on the explicit factorization
        let o = semisimple(&[3.0, 0.0]);
        assert_eq!(contract_orbit(&o), JordanData::scalar(cr(3.0), 1));
        let q = CMat::from_row_slice(2, 1, &[cr(1.0), cr(1.0)]);
        let p = CMat::from_row_slice(1, 2, &[cr(2.0), cr(1.0)]);
        let qp = &q * &p;
        assert_eq!(jordan_of_matrix(&qp, 1e-8), o);
        let pq = &p * &q;
        assert!((pq[(0, 0)] - linalg::trace(&qp)).norm() < 1e-12);
    }

    #[test]
    fn expand_round_trips() {
        for o in [
            JordanData::nilpotent(vec![2, 2, 1]).unwrap(),
            JordanData::nilpotent(vec![2]).unwrap(),
            semisimple(&[3.0, 0.0]),
        ] {
            let c0 = contract_orbit(&o);
            assert_eq!(expand_orbit(&c0, o.dim()).unwrap(), o);
        }
        // zero orbit in gl0 expanded: column of length n gives the zero matrix
        assert_eq!(
            expand_orbit(&JordanData::empty(), 4).unwrap(),
            JordanData::scalar(cr(0.0), 4)
        );
        // (3) in gl1 to dim 2
        let o = JordanData::scalar(cr(3.0), 1);
        assert_eq!(expand_orbit(&o, 2).unwrap(), semisimple(&[3.0, 0.0]));
        // too-small target: π̆₀ = (1,1) needs a column of length ≥ 2
        let o = JordanData::nilpotent(vec![1, 1]).unwrap();
        assert!(matches!(
            expand_orbit(&o, 3),
            Err(OrbitError::TargetTooSmall { .. })
        ));
    }

    #[test]
    fn specialize_examples() {
        let m = specialize_marking(&Marking(vec![cr(2.0), cr(5.0)]));
        assert_eq!(m, Marking(vec![cr(0.0), cr(-2.0), cr(-5.0)]));
        assert!(m.is_special());
        assert_eq!(specialize_marking(&Marking(vec![])), Marking(vec![cr(0.0)]));
    }

    #[test]
    fn special_marking_annihilates_r_orbit() {
        // Q injective, P surjective, Λ = −PQ marked by (ξ_l);
        // then R = QP satisfies R·Π(R + ξ_l) = 0
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..10 {
            let n = rng.gen_range(3..=5);
            let k = rng.gen_range(1..n);
            let q = CMat::from_fn(n, k, |_, _| {
                c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
            });
            let p = CMat::from_fn(k, n, |_, _| {
                c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
            });
            if rank(&q) < k || rank(&p) < k {
                continue;
            }
            let lam = -(&p * &q);
            let marking = Marking::minimal(&jordan_of_matrix(&lam, 1e-7));
            let r = &q * &p;
            let mut prod = r.clone();
            for xi in &marking.0 {
                prod = &prod * &(&r + eye(n) * *xi);
            }
            let scale = max_abs(&r).max(1.0).powi(marking.0.len() as i32 + 1);
            assert!(max_abs(&prod) < 1e-7 * scale);
        }
    }

    #[test]
    fn scalar_shift_examples() {
        let orbits = vec![semisimple(&[1.0, 2.0]), semisimple(&[0.0, 0.0])];
        let residual = semisimple(&[4.0, 7.0]);
        let (same, same_res) = scalar_shift(&orbits, &residual, &[cr(0.0), cr(0.0)]);
        assert_eq!(same, orbits);
        assert_eq!(same_res, residual);

        let (shifted, res) = scalar_shift(&orbits, &residual, &[cr(1.0), cr(-3.0)]);
        assert_eq!(shifted[0], semisimple(&[2.0, 3.0]));
        assert_eq!(shifted[1], semisimple(&[-3.0, -3.0]));
        assert_eq!(res, semisimple(&[2.0, 5.0]));
        // matrix oracle
        let m = orbits[0].representative() + eye(2) * cr(1.0);
        assert_eq!(jordan_of_matrix(&m, 1e-6), shifted[0]);
    }

    #[test]
    fn contract_matches_rank_oracle_on_random_factorizations() {
        let mut rng = StdRng::seed_from_u64(42);
        for case in 0..60 {
            // a matrix with known integer Jordan data, conjugated
            let n = rng.gen_range(2..=6);
            let mut merged: Vec<(C, Vec<usize>)> = Vec::new();
            let mut left = n;
            let evs = [-1.0, 0.0, 0.0, 1.0, 2.0];
            while left > 0 {
                let p = rng.gen_range(1..=left.min(3));
                let s = cr(evs[rng.gen_range(0..evs.len())]);
                if let Some(hit) = merged.iter_mut().find(|(v, _)| (*v - s).norm() < 1e-12) {
                    hit.1.push(p);
                    hit.1.sort_unstable_by(|a, b| b.cmp(a));
                } else {
                    merged.push((s, vec![p]));
                }
                left -= p;
            }
            let jd = JordanData::new(merged).unwrap();
            let j = jd.representative();
            let g = CMat::from_fn(n, n, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let m = match linalg::inverse(&g) {
                Some(gi) => &g * j * gi,
                None => continue,
            };
            let r = rank(&m);
            let qmat = linalg::column_space(&m);
            let pmat = qmat.adjoint() * &m; // m = qmat · pmat, qmat injective
            assert_eq!(rank(&pmat), r);
            let pq = &pmat * &qmat;
            let predicted = contract_orbit(&jd);
            let measured = jordan_of_matrix(&pq, 0.25);
            assert_eq!(predicted, measured, "case {case}: jordan {jd:?}");
            // rank-sequence oracle: rank (PQ)^j = rank (QP)^{j+1}, with an
            // absolute cutoff scaled to the matrix powers
            let scale = (max_abs(&m) + 1.0).max(max_abs(&pq) + 1.0);
            for pow in 0..3usize {
                let a1 = linalg::RANK_RTOL * scale.powi(pow as i32 + 1);
                let a2 = linalg::RANK_RTOL * scale.powi(pow as i32 + 2);
                assert_eq!(
                    linalg::rank_with(&linalg::mat_pow(&pq, pow + 1), a1),
                    linalg::rank_with(&linalg::mat_pow(&m, pow + 2), a2),
                );
            }
        }
    }
}
