//! Leading term of the formal normal form at irregular infinity.
//!
//! The gauge series `ĝ = 1 + g₁/z + …` taking `𝒜` to `(Az + T + Λ/z)dz`
//! has `g₁ = h₁ + Y₁ + X` with every piece given in closed form by the
//! residue data; resonant nodes (where `1 + ad_Λ` drops rank) are solved on
//! the invertible complement and reported.

use super::{FlowError, FlowState};
use crate::linalg::{self, cr, zeros, CMat, C};
use crate::phase::TimeDirection;

/// The closed-form leading-term data, all living on `U_∞` (or `V` when
/// ∞ ∉ J, in which case `QP = 0`).
#[derive(Debug, Clone)]
pub struct NormalFormData {
    /// `X = ad_A⁻¹(B)`
    pub x: CMat,
    /// `R = δ(QP + [X,B]/2)`
    pub r: CMat,
    /// `Λ = π_h(R)`: the exponent of formal monodromy (node-diagonal part)
    pub lambda: CMat,
    /// `Y₁ = ad_T⁻¹(R − Λ)`
    pub y1: CMat,
    /// `L₂ = π_h(R₂ + [Y₁, R]/2)`
    pub l2: CMat,
    /// solution of `(1 + ad_Λ) h₁ = L₂` (on the invertible complement when
    /// resonant)
    pub h1: CMat,
    /// `g₁ = h₁ + Y₁ + X`
    pub g1: CMat,
    /// nodes (part, index) where `1 + ad_Λ` was singular
    pub resonant_nodes: Vec<(usize, usize)>,
    /// the component of L₂ in the singular subspace (zero when nonresonant)
    pub a1: CMat,
}

/// Compute the leading term of the normal form at `z = ∞`.
pub fn leading_term(state: &FlowState) -> Result<NormalFormData, FlowError> {
    let space = &state.space;
    let inf = state.fourier.infinity_part();
    let keep: Vec<usize> = match inf {
        Some(j) => space.complement_indices(j),
        None => (0..space.dim()).collect(),
    };
    let nu = keep.len();
    let compress = |m: &CMat| CMat::from_fn(nu, nu, |r, c| m[(keep[r], keep[c])]);
    let node_at = super::node_of_index(space);
    let nodes_u: Vec<(usize, usize)> = keep.iter().map(|&i| node_at[i]).collect();
    let times_flat = state.time_of_index();
    let times_u: Vec<C> = keep.iter().map(|&i| times_flat[i]).collect();

    let gamma = state.gamma();
    let b_u = compress(&space.off_diagonal(gamma));
    let x_u = compress(&state.x_matrix());
    let t_u = compress(&state.t_finite());
    let (qp_u, qcp_u) = match inf {
        Some(j) => {
            let mut proj = zeros(space.dim(), space.dim());
            for idx in space.part_range(j) {
                proj[(idx, idx)] = cr(1.0);
            }
            (
                compress(&(gamma * &proj * gamma)),
                compress(&(gamma * &state.t_infinity() * gamma)),
            )
        }
        None => (zeros(nu, nu), zeros(nu, nu)),
    };

    // projections: δ onto part-diagonal, π_h onto node-diagonal
    let delta_u = |m: &CMat| -> CMat {
        CMat::from_fn(nu, nu, |r, c| {
            if nodes_u[r].0 == nodes_u[c].0 {
                m[(r, c)]
            } else {
                cr(0.0)
            }
        })
    };
    let pi_h = |m: &CMat| -> CMat {
        CMat::from_fn(nu, nu, |r, c| {
            if nodes_u[r] == nodes_u[c] {
                m[(r, c)]
            } else {
                cr(0.0)
            }
        })
    };

    let r = delta_u(&(&qp_u + linalg::commutator(&x_u, &b_u) * cr(0.5)));
    let lambda = pi_h(&r);
    // Y₁ = ad_T⁻¹(R − Λ): divide by (t_i − t_i') on the within-part
    // off-node entries
    let mut y1 = zeros(nu, nu);
    for rr in 0..nu {
        for cc in 0..nu {
            if nodes_u[rr].0 == nodes_u[cc].0 && nodes_u[rr] != nodes_u[cc] {
                y1[(rr, cc)] = r[(rr, cc)] / (times_u[rr] - times_u[cc]);
            }
        }
    }
    let ad2 = |m: &CMat, n: &CMat| linalg::commutator(m, &linalg::commutator(m, n));
    let r2h = pi_h(
        &(&qcp_u
            + linalg::commutator(&x_u, &qp_u)
            + ad2(&x_u, &t_u) * cr(0.5)
            + ad2(&x_u, &b_u) * cr(1.0 / 3.0)),
    );
    let l2 = pi_h(&(&r2h + linalg::commutator(&y1, &r) * cr(0.5)));

    // h₁ node by node: (1 + ad_{Λ_i}) h = L₂_i, pseudo-solved on the
    // singular complement when resonant
    let mut h1 = zeros(nu, nu);
    let mut a1 = zeros(nu, nu);
    let mut resonant_nodes = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (start, &node) in nodes_u.iter().enumerate() {
        if !seen.insert(node) {
            continue;
        }
        let d: usize = nodes_u.iter().filter(|&&n| n == node).count();
        let lam_i = lambda.view((start, start), (d, d)).into_owned();
        let l2_i = l2.view((start, start), (d, d)).into_owned();
        // vec(h) with vec(Λh − hΛ) = (I⊗Λ − Λᵀ⊗I) vec(h), column-major
        let m2 = d * d;
        let mut op = zeros(m2, m2);
        for col in 0..d {
            for row in 0..d {
                let vi = col * d + row;
                op[(vi, vi)] += cr(1.0);
                for r2 in 0..d {
                    // (Λ h)_{r2, col} involves h_{row, col} via Λ_{r2, row}
                    op[(col * d + r2, vi)] += lam_i[(r2, row)];
                }
                for c2 in 0..d {
                    // (h Λ)_{row, c2} involves h_{row, col} via Λ_{col, c2}
                    op[(c2 * d + row, vi)] -= lam_i[(col, c2)];
                }
            }
        }
        let mut rhs = zeros(m2, 1);
        for col in 0..d {
            for row in 0..d {
                rhs[(col * d + row, 0)] = l2_i[(row, col)];
            }
        }
        let svd = op.clone().svd(true, true);
        let smin = svd.singular_values.min();
        let scale = svd.singular_values.max().max(1.0);
        let resonant = smin <= 1e-8 * scale;
        let sol = svd
            .pseudo_inverse(1e-8 * scale)
            .expect("pseudo inverse of the shift operator")
            * &rhs;
        for col in 0..d {
            for row in 0..d {
                h1[(start + row, start + col)] = sol[(col * d + row, 0)];
            }
        }
        if resonant {
            resonant_nodes.push(node);
            // A₁ = L₂ − (1 + ad_Λ) h₁ on this node
            let h_i = h1.view((start, start), (d, d)).into_owned();
            let res = &l2_i - (&h_i + linalg::commutator(&lam_i, &h_i));
            a1.view_mut((start, start), (d, d)).copy_from(&res);
        }
    }
    let g1 = &h1 + &y1 + &x_u;
    Ok(NormalFormData {
        x: x_u,
        r,
        lambda,
        y1,
        l2,
        h1,
        g1,
        resonant_nodes,
        a1,
    })
}

/// `Tr(g₁ δT)` — the contribution of the irregular singularity to the
/// Hamiltonian one-form, via the leading term.
pub fn varpi_infinity_from_g1(state: &FlowState, dt: &TimeDirection) -> Result<C, FlowError> {
    let nf = leading_term(state)?;
    let space = &state.space;
    let inf = state.fourier.infinity_part();
    let keep: Vec<usize> = match inf {
        Some(j) => space.complement_indices(j),
        None => (0..space.dim()).collect(),
    };
    let dtu_full = state.dt_finite(dt);
    let dtu = CMat::from_fn(keep.len(), keep.len(), |r, c| dtu_full[(keep[r], keep[c])]);
    Ok(linalg::trace(&(&nf.g1 * &dtu)))
}
