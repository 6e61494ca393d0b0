//! The full linear connection on the trivial bundle over ℙ¹ × (times):
//! `Ω = (Az+B)dz + d(zT) + Q dlog(z−T_∞) P + [dT, X] + δ(XB)~ + δ(QP)~`,
//! its restriction `Ω_i` to the divisors `z = t_i`, and the analogues at
//! the other nodes.

use super::{node_of_index, tilde, FlowError, FlowState};
use crate::linalg::{self, cr, eye, zeros, CMat, C};
use crate::phase::{connection_matrix, PhaseError, TimeDirection};

/// Components of `Ω` at a point `(z, T̂)`: the `dz` coefficient and one
/// matrix per core node time `t_i`, all on `U_∞` (or `V` when ∞ ∉ J).
#[derive(Debug, Clone)]
pub struct ConnectionEval {
    pub b_z: CMat,
    /// node list parallel to `b_t`
    pub nodes: Vec<(usize, usize)>,
    pub b_t: Vec<CMat>,
}

impl ConnectionEval {
    /// Contract the time components with a direction.
    pub fn contract(&self, dt: &TimeDirection) -> CMat {
        let mut out = zeros(self.b_z.nrows(), self.b_z.ncols());
        for (&(j, k), m) in self.nodes.iter().zip(&self.b_t) {
            out += m * dt.0[j][k];
        }
        out
    }
}

/// Evaluate `Ω` at `(z, T̂)`.
pub fn full_connection(state: &FlowState, z: C) -> Result<ConnectionEval, FlowError> {
    let space = &state.space;
    let inf = state.fourier.infinity_part();
    let b_z = connection_matrix(space, &state.fourier, &state.phase, &state.times, z)?;
    let gamma = state.gamma();
    let x_full = state.x_matrix();
    // δ(XB) + δ(QP) on V
    let m_full = {
        let xb = space.delta(&(&x_full * gamma));
        let qp = match inf {
            Some(j) => {
                let mut proj = zeros(space.dim(), space.dim());
                for idx in space.part_range(j) {
                    proj[(idx, idx)] = cr(1.0);
                }
                space.delta(&(gamma * &proj * gamma))
            }
            None => zeros(space.dim(), space.dim()),
        };
        xb + qp
    };
    let res = state.residues();
    let nodes = space.nodes();
    let keep: Vec<usize> = match inf {
        Some(j) => space.complement_indices(j),
        None => (0..space.dim()).collect(),
    };
    let node_at = node_of_index(space);
    let compress = |m: &CMat| CMat::from_fn(keep.len(), keep.len(), |r, c| m[(keep[r], keep[c])]);
    let x_u = compress(&x_full);
    let mut b_t = Vec::with_capacity(nodes.len());
    for (flat, &(j, k)) in nodes.iter().enumerate() {
        if Some(j) == inf {
            // −R_i / (z − t_i)
            let t = state.times.value(j, k);
            if (z - t).norm() < 1e-13 * (1.0 + t.norm()) {
                return Err(FlowError::Phase(PhaseError::PoleEvaluation(t)));
            }
            b_t.push(-&res.r[flat] / (z - t));
        } else {
            // z·Id_i + [Id_i, X] + the δt_i slice of the tilde terms
            let mut m = zeros(keep.len(), keep.len());
            for (rr, &r) in keep.iter().enumerate() {
                if node_at[r] == (j, k) {
                    m[(rr, rr)] = z;
                }
            }
            let mut idem = zeros(keep.len(), keep.len());
            for (rr, &r) in keep.iter().enumerate() {
                if node_at[r] == (j, k) {
                    idem[(rr, rr)] = cr(1.0);
                }
            }
            m += linalg::commutator(&idem, &x_u);
            // tilde slice: rows/cols at node i pick up M/(t_i − t_other)
            for (rr, &r) in keep.iter().enumerate() {
                for (cc, &c) in keep.iter().enumerate() {
                    let (jr, kr) = node_at[r];
                    let (jc, kc) = node_at[c];
                    if jr != jc || (jr, kr) == (jc, kc) {
                        continue;
                    }
                    let involved_i = (jr, kr) == (j, k) || (jc, kc) == (j, k);
                    if !involved_i {
                        continue;
                    }
                    let ti = state.times.value(j, k);
                    let other = if (jr, kr) == (j, k) {
                        state.times.value(jc, kc)
                    } else {
                        state.times.value(jr, kr)
                    };
                    m[(rr, cc)] += m_full[(r, c)] / (ti - other);
                }
            }
            b_t.push(m);
        }
    }
    Ok(ConnectionEval {
        b_z,
        nodes,
        b_t,
    })
}

/// The connection one-form `Ω_i` on the space of times governing
/// `dQ_i = Ω_i Q_i`, `dP_i = −P_i Ω_i`, evaluated on a direction.
///
/// For `i ∈ I_∞` this is the restriction `Ω|_{z=t_i}`; at a node of a
/// finite part `k` it is
/// `Σ_{j∈I_k∖i} Q_jP_j dlog(t_i−t_j) + pr_k( δ(ΞΓ)~ + δT̂·Ξ +
///  (Γδt_i − φ_k⁻¹ΞδT̂ + δ(t_iT̂) + C_i)·φ_k )`.
pub fn local_connection(
    state: &FlowState,
    node: (usize, usize),
    dt: &TimeDirection,
) -> Result<CMat, FlowError> {
    let space = &state.space;
    let (k_part, k_node) = node;
    let inf = state.fourier.infinity_part();
    let res = state.residues();
    let t_i = state.times.value(k_part, k_node);
    let dt_i = dt.0[k_part][k_node];
    // Σ over the other nodes of the same part
    let keep = space.complement_indices(k_part);
    let mut out = zeros(keep.len(), keep.len());
    for (flat, &(j, kk)) in res.nodes.iter().enumerate() {
        if j != k_part || kk == k_node {
            continue;
        }
        let t_j = state.times.value(j, kk);
        let dt_j = dt.0[j][kk];
        out += &res.r[flat] * ((dt_i - dt_j) / (t_i - t_j));
    }
    // pr_k( δ(ΞΓ)~ + δT̂ Ξ + (Γ δt_i − φ_k⁻¹ Ξ δT̂ + t_i δT̂ + T̂ δt_i + C_i) φ_k )
    let gamma = state.gamma();
    let xi = state.xi();
    let dt_hat = dt.t_hat(space);
    let t_hat = state.times.t_hat(space);
    let delta_xg = space.delta(&(&xi * gamma));
    let tilde_term = tilde(space, &state.times, &delta_xg, dt)?;
    // φ_k = Id_k + Σ_j φ_{jk} Id_j as a diagonal on V
    let mut phi_k = zeros(space.dim(), space.dim());
    let mut phi_k_inv = zeros(space.dim(), space.dim());
    for j in 0..space.part_count() {
        let v = if j == k_part {
            cr(1.0)
        } else {
            state.fourier.phi(j, k_part)
        };
        for idx in space.part_range(j) {
            phi_k[(idx, idx)] = v;
            phi_k_inv[(idx, idx)] = cr(1.0) / v;
        }
    }
    // C_i: a_k T_∞δT_∞ on W_∞ and −t_iδt_i − TδT on U_∞ (finite k);
    // for k = ∞: A t_i δt_i on U_∞
    let c_i = if Some(k_part) == inf {
        space.a_matrix(&state.fourier) * (t_i * dt_i)
    } else {
        let a_k = state
            .fourier
            .finite_value(k_part)
            .expect("finite part has a finite point");
        let tinf = state.t_infinity();
        let dtinf = state.dt_infinity(dt);
        let tu = state.t_finite();
        let dtu = state.dt_finite(dt);
        let mut u_proj = eye(space.dim());
        if let Some(j) = inf {
            for idx in space.part_range(j) {
                u_proj[(idx, idx)] = cr(0.0);
            }
        }
        &tinf * &dtinf * a_k - u_proj * (t_i * dt_i) - &tu * &dtu
    };
    let paren = gamma * dt_i - &phi_k_inv * &xi * &dt_hat + &dt_hat * t_i + &t_hat * dt_i + c_i;
    let inner = tilde_term + &dt_hat * &xi + paren * &phi_k;
    for (rr, &r) in keep.iter().enumerate() {
        for (cc, &c) in keep.iter().enumerate() {
            out[(rr, cc)] += inner[(r, c)];
        }
    }
    Ok(out)
}
