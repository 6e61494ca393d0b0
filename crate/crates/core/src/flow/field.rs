//! The isomonodromy vector fields: the general matrix form, the
//! part-blockwise component form, and the classical specializations
//! (interval, frozen finite times, frozen irregular times, no part at ∞).

use super::{node_of_index, tilde, FlowError, FlowState};
use crate::linalg::{self, cr, zeros, CMat, C};
use crate::phase::{FourierConfig, FourierPoint, GradedSpace, PhasePoint, TimeConfig, TimeDirection};

/// Horizontal-section equation for Γ as a function of the times:
/// `δΓ = [δ(ΞΓ)~, Γ] + (γΞδT̂ + δT̂Ξγ)° − φ⁻¹(ΞδT̂Ξ)
///       + (0, −T_∞δT_∞PA; AQT_∞δT_∞, −TδTX − XTδT)`.
pub fn vector_field(state: &FlowState, dt: &TimeDirection) -> Result<CMat, FlowError> {
    let space = &state.space;
    let gamma = state.gamma();
    let xi = state.xi();
    let dt_hat = dt.t_hat(space);
    let delta_xg = space.delta(&(&xi * gamma));
    let e1 = linalg::commutator(&tilde(space, &state.times, &delta_xg, dt)?, gamma);
    let gamma_aff = gamma + state.times.t_hat(space);
    let e2 = space.off_diagonal(&(&gamma_aff * &xi * &dt_hat + &dt_hat * &xi * &gamma_aff));
    let e3 = -space.apply_phi_inverse(&state.fourier, &(&xi * &dt_hat * &xi));
    let a = space.a_matrix(&state.fourier);
    let tinf = state.t_infinity();
    let dtinf = state.dt_infinity(dt);
    let tu = state.t_finite();
    let dtu = state.dt_finite(dt);
    let x = state.x_matrix();
    let e4 = -&tinf * &dtinf * gamma * &a + &a * gamma * &tinf * &dtinf
        - &tu * &dtu * &x
        - &x * &tu * &dtu;
    Ok(e1 + e2 + e3 + e4)
}

/// The same field assembled part-block by part-block. Used as an
/// independent code path in tests and the verification suites.
pub fn block_field(state: &FlowState, dt: &TimeDirection) -> Result<CMat, FlowError> {
    let space = &state.space;
    let fourier = &state.fourier;
    let k = space.part_count();
    let inf = fourier.infinity_part();
    let gamma = state.gamma();
    let block = |m: &CMat, i: usize, j: usize| -> CMat {
        let ri = space.part_range(i);
        let rj = space.part_range(j);
        m.view((ri.start, rj.start), (ri.len(), rj.len())).into_owned()
    };
    // per-part times as diagonal blocks
    let t_hat = state.times.t_hat(space);
    let dt_hat = dt.t_hat(space);
    let mut out = zeros(space.dim(), space.dim());
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let mut acc = zeros(space.part_dim(i), space.part_dim(j));
            let b_ij = block(gamma, i, j);
            let t_i = block(&t_hat, i, i);
            let t_j = block(&t_hat, j, j);
            let dt_i = block(&dt_hat, i, i);
            let dt_j = block(&dt_hat, j, j);
            for l in 0..k {
                let x_il = block(gamma, i, l) * fourier.phi(i, l);
                let x_lj = block(gamma, l, j) * fourier.phi(l, j);
                let b_li = block(gamma, l, i);
                let b_lj = block(gamma, l, j);
                let b_jl = block(gamma, j, l);
                // quadratic tilde terms: (X_il B_li)~ B_ij + B_ij (B_jl X_lj)~
                acc += part_tilde(state, i, &(&x_il * &b_li), dt) * &b_ij;
                acc += &b_ij * part_tilde(state, j, &(&b_jl * (&b_lj * fourier.phi(l, j))), dt);
                // dT_i X_il B_lj + B_il X_lj dT_j − X_il dT_l X_lj / φ_ij
                acc += &dt_i * &x_il * &b_lj;
                acc += block(gamma, i, l) * &x_lj * &dt_j;
                let dt_l = block(&dt_hat, l, l);
                if fourier.phi(i, j).norm() > 0.0 {
                    acc -= &x_il * &dt_l * &x_lj / fourier.phi(i, j);
                }
            }
            // dT_i X_ij T_j + T_i X_ij dT_j − {cases}
            let x_ij = &b_ij * fourier.phi(i, j);
            acc += &dt_i * &x_ij * &t_j + &t_i * &x_ij * &dt_j;
            if Some(i) == inf {
                let a_j = fourier.finite_value(j).expect("i=∞ forces j finite");
                acc -= &t_i * &dt_i * &b_ij * a_j;
            } else if Some(j) == inf {
                let a_i = fourier.finite_value(i).expect("j=∞ forces i finite");
                acc += &b_ij * &t_j * &dt_j * a_i;
            } else {
                acc -= &t_i * &dt_i * &x_ij + &x_ij * &t_j * &dt_j;
            }
            let ri = space.part_range(i);
            let rj = space.part_range(j);
            out.view_mut((ri.start, rj.start), (ri.len(), rj.len())).copy_from(&acc);
        }
    }
    Ok(out)
}

/// One-sided tilde on a single part block `m ∈ End(W_j)`.
fn part_tilde(state: &FlowState, j: usize, m: &CMat, dt: &TimeDirection) -> CMat {
    let space = &state.space;
    let base = space.part_range(j).start;
    let nodes = node_of_index(space);
    let mut out = zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let (_, kr) = nodes[base + r];
            let (_, kc) = nodes[base + c];
            if kr == kc {
                continue;
            }
            let tr = state.times.value(j, kr);
            let tc = state.times.value(j, kc);
            out[(r, c)] = m[(r, c)] * (dt.0[j][kr] - dt.0[j][kc]) / (tr - tc);
        }
    }
    out
}

/// Interval data `(P, Q, T_0, T_∞)` extracted from a two-part state with the
/// finite part at the origin.
pub struct IntervalData {
    pub finite_part: usize,
    pub infinity_part: usize,
    pub q: CMat,
    pub p: CMat,
}

pub fn interval_data(state: &FlowState) -> Result<IntervalData, FlowError> {
    if state.fourier.part_count() != 2 {
        return Err(FlowError::NotIntervalShape);
    }
    let infinity_part = state.fourier.infinity_part().ok_or(FlowError::NotIntervalShape)?;
    let finite_part = 1 - infinity_part;
    match state.fourier.points()[finite_part] {
        FourierPoint::Finite(a) if a.norm() < 1e-12 => {}
        _ => return Err(FlowError::NotIntervalShape),
    }
    let rf = state.space.part_range(finite_part);
    let ri = state.space.part_range(infinity_part);
    let q = state
        .gamma()
        .view((rf.start, ri.start), (rf.len(), ri.len()))
        .into_owned();
    let p = state
        .gamma()
        .view((ri.start, rf.start), (ri.len(), rf.len()))
        .into_owned();
    Ok(IntervalData {
        finite_part,
        infinity_part,
        q,
        p,
    })
}

/// The interval-shape equations written directly:
/// `dQ = Q (PQ)~ + (QP)~ Q + T_0 Q δT_∞ + δT_0 Q T_∞` and
/// `−dP = P (QP)~ + (PQ)~ P + T_∞ P δT_0 + δT_∞ P T_0`.
/// Returns the full-V tangent for comparison with [`vector_field`].
pub fn interval_field(state: &FlowState, dt: &TimeDirection) -> Result<CMat, FlowError> {
    let iv = interval_data(state)?;
    let space = &state.space;
    let t_hat = state.times.t_hat(space);
    let dt_hat = dt.t_hat(space);
    let rf = space.part_range(iv.finite_part);
    let ri = space.part_range(iv.infinity_part);
    let sub = |m: &CMat, r: &std::ops::Range<usize>| m.view((r.start, r.start), (r.len(), r.len())).into_owned();
    let t0 = sub(&t_hat, &rf);
    let tinf = sub(&t_hat, &ri);
    let dt0 = sub(&dt_hat, &rf);
    let dtinf = sub(&dt_hat, &ri);
    let pq = &iv.p * &iv.q; // End(W_∞)
    let qp = &iv.q * &iv.p; // End(W_0)
    let tpq = part_tilde(state, iv.infinity_part, &pq, dt);
    let tqp = part_tilde(state, iv.finite_part, &qp, dt);
    let dq = &iv.q * &tpq + &tqp * &iv.q + &t0 * &iv.q * &dtinf + &dt0 * &iv.q * &tinf;
    let dp = -(&iv.p * &tqp + &tpq * &iv.p + &tinf * &iv.p * &dt0 + &dtinf * &iv.p * &t0);
    let mut out = zeros(space.dim(), space.dim());
    out.view_mut((rf.start, ri.start), (rf.len(), ri.len())).copy_from(&dq);
    out.view_mut((ri.start, rf.start), (ri.len(), rf.len())).copy_from(&dp);
    Ok(out)
}

/// Frozen finite times: `dQ = Q (PQ)~`, `dP = −(PQ)~ P`.
pub fn frozen_finite_field(state: &FlowState, dt: &TimeDirection) -> Result<CMat, FlowError> {
    let iv = interval_data(state)?;
    let space = &state.space;
    let rf = space.part_range(iv.finite_part);
    let ri = space.part_range(iv.infinity_part);
    let pq = &iv.p * &iv.q;
    let tpq = part_tilde(state, iv.infinity_part, &pq, dt);
    let mut out = zeros(space.dim(), space.dim());
    out.view_mut((rf.start, ri.start), (rf.len(), ri.len()))
        .copy_from(&(&iv.q * &tpq));
    out.view_mut((ri.start, rf.start), (ri.len(), rf.len()))
        .copy_from(&(-(&tpq * &iv.p)));
    Ok(out)
}

/// Frozen irregular times: `dQ = (QP)~ Q`, `dP = −P (QP)~`, with the
/// projected form `dR = [R~, R]` on `R = QP`.
pub fn frozen_infinity_field(state: &FlowState, dt: &TimeDirection) -> Result<CMat, FlowError> {
    let iv = interval_data(state)?;
    let space = &state.space;
    let rf = space.part_range(iv.finite_part);
    let ri = space.part_range(iv.infinity_part);
    let qp = &iv.q * &iv.p;
    let tqp = part_tilde(state, iv.finite_part, &qp, dt);
    let mut out = zeros(space.dim(), space.dim());
    out.view_mut((rf.start, ri.start), (rf.len(), ri.len()))
        .copy_from(&(&tqp * &iv.q));
    out.view_mut((ri.start, rf.start), (ri.len(), rf.len()))
        .copy_from(&(-(&iv.p * &tqp)));
    Ok(out)
}

/// `dR = [R~, R]` for `R = QP` on the finite part (frozen irregular times).
pub fn frozen_infinity_projected(state: &FlowState, dt: &TimeDirection) -> Result<CMat, FlowError> {
    let iv = interval_data(state)?;
    let qp = &iv.q * &iv.p;
    let tqp = part_tilde(state, iv.finite_part, &qp, dt);
    Ok(linalg::commutator(&tqp, &qp))
}

/// The duality permutation on interval states:
/// `(W_0, W_∞, P, Q, T_0, T_∞) ↦ (W_∞, W_0, Q, −P, −T_∞, T_0)`,
/// relabelled so the new finite part again comes first.
pub fn harnad_dual(state: &FlowState) -> Result<FlowState, FlowError> {
    let iv = interval_data(state)?;
    let space = &state.space;
    let dims_f = space.node_dims()[iv.finite_part].clone();
    let dims_i = space.node_dims()[iv.infinity_part].clone();
    // new part 0 (finite, at the origin) = old ∞ part; new part 1 = ∞
    let new_space = GradedSpace::new(vec![dims_i.clone(), dims_f.clone()]);
    let new_fourier = FourierConfig::new(vec![
        FourierPoint::Finite(cr(0.0)),
        FourierPoint::Infinity,
    ])?;
    let mut m = zeros(new_space.dim(), new_space.dim());
    let r0 = new_space.part_range(0);
    let r1 = new_space.part_range(1);
    // new Q : W_∞new → W_0new is −P_old; new P : W_0new → W_∞new is Q_old
    m.view_mut((r0.start, r1.start), (r0.len(), r1.len()))
        .copy_from(&(-&iv.p));
    m.view_mut((r1.start, r0.start), (r1.len(), r0.len()))
        .copy_from(&iv.q);
    let new_phase = PhasePoint::new(&new_space, m)?;
    let t_old_f = state.times.values()[iv.finite_part].clone();
    let t_old_i = state.times.values()[iv.infinity_part].clone();
    let new_times = TimeConfig::new(vec![
        t_old_i.iter().map(|t| -t).collect(),
        t_old_f,
    ])?;
    Ok(FlowState {
        fourier: new_fourier,
        space: new_space,
        phase: new_phase,
        times: new_times,
        log_tau: state.log_tau,
    })
}

/// Push a time direction through [`harnad_dual`]: directions follow the
/// part relabelling, with the sign flip on the old ∞ times.
pub fn harnad_dual_direction(state: &FlowState, dt: &TimeDirection) -> Result<TimeDirection, FlowError> {
    let iv = interval_data(state)?;
    Ok(TimeDirection(vec![
        dt.0[iv.infinity_part].iter().map(|t| -t).collect(),
        dt.0[iv.finite_part].clone(),
    ]))
}

/// Push a phase tangent through [`harnad_dual`].
pub fn harnad_dual_tangent(state: &FlowState, u: &CMat) -> Result<CMat, FlowError> {
    let iv = interval_data(state)?;
    let space = &state.space;
    let rf = space.part_range(iv.finite_part);
    let ri = space.part_range(iv.infinity_part);
    let uq = u.view((rf.start, ri.start), (rf.len(), ri.len())).into_owned();
    let up = u.view((ri.start, rf.start), (ri.len(), rf.len())).into_owned();
    let dim = space.dim();
    let new_space = GradedSpace::new(vec![
        space.node_dims()[iv.infinity_part].clone(),
        space.node_dims()[iv.finite_part].clone(),
    ]);
    let r0 = new_space.part_range(0);
    let r1 = new_space.part_range(1);
    let mut out = zeros(dim, dim);
    out.view_mut((r0.start, r1.start), (r0.len(), r1.len())).copy_from(&(-&up));
    out.view_mut((r1.start, r0.start), (r1.len(), r0.len())).copy_from(&uq);
    Ok(out)
}

/// The projected equations: the evolution of `(B, {R_i}_{i∈I_∞})`, which
/// depends only on the residues and not on their lifts.
pub struct ProjectedField {
    /// δB on U_∞ (between finite parts)
    pub db: CMat,
    /// δR_i = [Ω_i, R_i] per node of the ∞ part, in node order
    pub dr: Vec<CMat>,
}

pub fn projected_field(state: &FlowState, dt: &TimeDirection) -> Result<ProjectedField, FlowError> {
    let inf = state.fourier.infinity_part().ok_or(FlowError::NeedsInfinity)?;
    let space = &state.space;
    let full = vector_field(state, dt)?;
    // δB: compress to U_∞ and drop within-part blocks
    let db = {
        let c = space.compress(&full, inf);
        // part-diagonal blocks of U are already zero for a tangent
        c
    };
    let res = state.residues();
    let mut dr = Vec::new();
    for (k, &(j, kk)) in res.nodes.iter().enumerate() {
        if j != inf {
            continue;
        }
        let om = super::connection::local_connection(state, (j, kk), dt)?;
        dr.push(linalg::commutator(&om, &res.r[k]));
    }
    Ok(ProjectedField { db, dr })
}

/// The no-∞ ("master") equations `dB = [δ(XB)~, B] + [[δT, X], B + T]°`.
pub fn master_field(state: &FlowState, dt: &TimeDirection) -> Result<CMat, FlowError> {
    if state.fourier.infinity_part().is_some() {
        return Err(FlowError::NeedsNoInfinity);
    }
    let space = &state.space;
    let b = state.gamma();
    let x = state.x_matrix();
    let t = state.times.t_hat(space);
    let dth = dt.t_hat(space);
    let dxb = space.delta(&(&x * b));
    let e1 = linalg::commutator(&tilde(space, &state.times, &dxb, dt)?, b);
    let inner = linalg::commutator(&dth, &x);
    let e2 = space.off_diagonal(&linalg::commutator(&inner, &(b + &t)));
    Ok(e1 + e2)
}

/// Lift residues `{R_i}` on `U` to a phase point on `U ⊕ (⊕ V_i)`: factor
/// each `R_i = Q_i P_i` through its column space, with an arbitrary gauge
/// `g_i` mixing the factors. Two different gauges give two lifts of the same
/// projected data.
pub fn lift_residues(
    dims_u: &[usize],
    times_u: &[C],
    r: &[CMat],
    times_inf: &[C],
    gauges: Option<&[CMat]>,
) -> Result<FlowState, FlowError> {
    let ranks: Vec<usize> = r.iter().map(linalg::rank).collect();
    let space = GradedSpace::new(vec![dims_u.to_vec(), ranks.clone()]);
    let fourier = FourierConfig::new(vec![
        FourierPoint::Finite(cr(0.0)),
        FourierPoint::Infinity,
    ])?;
    let times = TimeConfig::new(vec![times_u.to_vec(), times_inf.to_vec()])?;
    let mut m = zeros(space.dim(), space.dim());
    let r0 = space.part_range(0);
    for (k, rk) in r.iter().enumerate() {
        let col = linalg::column_space(rk);
        let mut q = col.clone();
        let mut p = col.adjoint() * rk;
        if let Some(gs) = gauges {
            let g = &gs[k];
            let gi = linalg::inverse(g).expect("gauge must be invertible");
            q = &q * g;
            p = gi * &p;
        }
        let rk_range = space.node_range(1, k);
        for (cc, c) in rk_range.clone().enumerate() {
            for (rr, rrow) in r0.clone().enumerate() {
                m[(rrow, c)] = q[(rr, cc)];
                m[(c, rrow)] = p[(cc, rr)];
            }
        }
    }
    let phase = PhasePoint::new(&space, m)?;
    Ok(FlowState::new(fourier, space, phase, times))
}
