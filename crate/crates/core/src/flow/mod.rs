//! The isomonodromy flow: Hamiltonian one-form, nonlinear vector fields,
//! the full linear connection, integration with conservation monitors, and
//! formal normal forms at irregular infinity.

pub mod connection;
pub mod field;
pub mod integrate;
pub mod normal_form;


use crate::linalg::{self, cr, zeros, CMat, C};
use crate::phase::{
    residues, FourierConfig, GradedSpace, PhaseError, PhasePoint, Residues, TimeConfig,
    TimeDirection,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("tilde operand has a nonzero cross-part block (residual {0:.3e}); ad_T^{{-1}} is only defined on part-block-diagonal matrices")]
    CrossPartTilde(f64),
    #[error("operation requires a part at infinity")]
    NeedsInfinity,
    #[error("operation requires no part at infinity")]
    NeedsNoInfinity,
    #[error("operation requires the two-part interval shape with the finite part at 0")]
    NotIntervalShape,
    #[error("path leaves the admissible time domain (within-part collision, margin {margin:.3e})")]
    PathLeftBase { margin: f64 },
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

/// A point of the total space: phase point, times, Fourier points, and the
/// accumulated `log τ` along whatever path led here.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub fourier: FourierConfig,
    pub space: GradedSpace,
    pub phase: PhasePoint,
    pub times: TimeConfig,
    pub log_tau: C,
}

impl FlowState {
    pub fn new(
        fourier: FourierConfig,
        space: GradedSpace,
        phase: PhasePoint,
        times: TimeConfig,
    ) -> Self {
        FlowState {
            fourier,
            space,
            phase,
            times,
            log_tau: cr(0.0),
        }
    }

    pub fn gamma(&self) -> &CMat {
        self.phase.matrix()
    }

    pub fn xi(&self) -> CMat {
        self.phase.xi(&self.space, &self.fourier)
    }

    pub fn residues(&self) -> Residues {
        residues(&self.space, &self.fourier, &self.phase)
    }

    /// `X = ad_A^{-1}(B)` as a full-V matrix (vanishing into/out of W_∞).
    pub fn x_matrix(&self) -> CMat {
        self.space.ad_a_inverse(&self.fourier, self.gamma())
    }

    /// T̂ restricted to the ∞ part (zero elsewhere); zero when ∞ ∉ J.
    pub fn t_infinity(&self) -> CMat {
        diag_on_part(&self.space, &self.times.t_hat(&self.space), self.fourier.infinity_part())
    }

    /// T̂ restricted to the finite parts.
    pub fn t_finite(&self) -> CMat {
        let t = self.times.t_hat(&self.space);
        &t - diag_on_part(&self.space, &t, self.fourier.infinity_part())
    }

    pub fn dt_infinity(&self, dt: &TimeDirection) -> CMat {
        diag_on_part(&self.space, &dt.t_hat(&self.space), self.fourier.infinity_part())
    }

    pub fn dt_finite(&self, dt: &TimeDirection) -> CMat {
        let d = dt.t_hat(&self.space);
        &d - diag_on_part(&self.space, &d, self.fourier.infinity_part())
    }

    /// Times of every node as a flat vector over basis indices of V.
    pub(crate) fn time_of_index(&self) -> Vec<C> {
        let mut out = vec![cr(0.0); self.space.dim()];
        for (j, part) in self.times.values().iter().enumerate() {
            for (k, &t) in part.iter().enumerate() {
                for idx in self.space.node_range(j, k) {
                    out[idx] = t;
                }
            }
        }
        out
    }
}

fn diag_on_part(space: &GradedSpace, m: &CMat, part: Option<usize>) -> CMat {
    let mut out = zeros(space.dim(), space.dim());
    if let Some(j) = part {
        for idx in space.part_range(j) {
            out[(idx, idx)] = m[(idx, idx)];
        }
    }
    out
}

/// Node labels (part, node) per basis index of V.
pub(crate) fn node_of_index(space: &GradedSpace) -> Vec<(usize, usize)> {
    let mut out = vec![(0usize, 0usize); space.dim()];
    for (j, part) in space.node_dims().iter().enumerate() {
        for k in 0..part.len() {
            for idx in space.node_range(j, k) {
                out[idx] = (j, k);
            }
        }
    }
    out
}

/// The tilde operation `ad_{T̂}^{-1} [δT̂, ·]` on a part-block-diagonal
/// matrix: the (node i, node i') entry inside one part picks up the factor
/// `(δt_i − δt_{i'}) / (t_i − t_{i'})`, node-diagonal entries vanish.
/// Cross-part blocks must be zero (they are in every formula this is used
/// in); a nonzero one is a precondition violation.
pub fn tilde(
    space: &GradedSpace,
    times: &TimeConfig,
    m: &CMat,
    dt: &TimeDirection,
) -> Result<CMat, FlowError> {
    let nodes = node_of_index(space);
    let scale = linalg::max_abs(m);
    let mut worst_cross = 0.0f64;
    let mut out = zeros(space.dim(), space.dim());
    for r in 0..space.dim() {
        for c in 0..space.dim() {
            let (jr, kr) = nodes[r];
            let (jc, kc) = nodes[c];
            if jr != jc {
                worst_cross = worst_cross.max(m[(r, c)].norm());
                continue;
            }
            if kr == kc {
                continue;
            }
            let tr = times.value(jr, kr);
            let tc = times.value(jc, kc);
            let dtr = dt.0[jr][kr];
            let dtc = dt.0[jc][kc];
            out[(r, c)] = m[(r, c)] * (dtr - dtc) / (tr - tc);
        }
    }
    if worst_cross > 1e-9 * scale.max(1.0) {
        return Err(FlowError::CrossPartTilde(worst_cross));
    }
    Ok(out)
}

/// The Hamiltonian one-form `ϖ = ϖ₀ + ϖ₁` evaluated on a time direction:
/// `ϖ₀ = ½ Tr(δ(ΞΓ)~ · δ(ΞΓ)) − Tr(Ξ γ Ξ δT̂)` with `γ = Γ + T̂`, and
/// `ϖ₁ = Tr(X² T δT) + Tr(P A Q T_∞ δT_∞)`.
pub fn varpi(state: &FlowState, dt: &TimeDirection) -> Result<C, FlowError> {
    let space = &state.space;
    let gamma = state.gamma();
    let xi = state.xi();
    let dt_hat = dt.t_hat(space);
    let xg = &xi * gamma;
    let delta_xg = space.delta(&xg);
    let t1 = linalg::trace(&(tilde(space, &state.times, &delta_xg, dt)? * &delta_xg)) * 0.5;
    let gamma_aff = gamma + state.times.t_hat(space);
    let t2 = -linalg::trace(&(&xi * &gamma_aff * &xi * &dt_hat));
    let x = state.x_matrix();
    let tu = state.t_finite();
    let dtu = state.dt_finite(dt);
    let t3 = linalg::trace(&(&x * &x * &tu * &dtu));
    let tinf = state.t_infinity();
    let dtinf = state.dt_infinity(dt);
    let a = space.a_matrix(&state.fourier);
    let t4 = linalg::trace(&(gamma * &a * gamma * &tinf * &dtinf));
    Ok(t1 + t2 + t3 + t4)
}

/// Warnings attached to results that remain valid but touched a resonant
/// configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceReport {
    /// nodes (part, index) whose Λ_i has eigenvalues differing by a nonzero
    /// integer within 1e-8
    pub resonant_nodes: Vec<(usize, usize)>,
}

impl ResonanceReport {
    pub fn is_resonant(&self) -> bool {
        !self.resonant_nodes.is_empty()
    }
}

/// Detect resonance: eigenvalue differences of each `Λ_i` within 1e-8 of a
/// nonzero integer.
pub fn resonance_report(state: &FlowState) -> ResonanceReport {
    let res = state.residues();
    let mut resonant_nodes = Vec::new();
    for (k, lam) in res.lambda.iter().enumerate() {
        let evs = linalg::eigenvalues(lam);
        let mut hit = false;
        for (i, a) in evs.iter().enumerate() {
            for b in evs.iter().skip(i + 1) {
                let d = a - b;
                let nearest = d.re.round();
                if nearest != 0.0 && (d - cr(nearest)).norm() < 1e-8 {
                    hit = true;
                }
            }
        }
        if hit {
            resonant_nodes.push(res.nodes[k]);
        }
    }
    ResonanceReport { resonant_nodes }
}

/// The same one-form assembled from residues: `Σ_{i∈I_∞} ϖ_i` from the
/// partial-fraction expansion of `½ Res Tr(𝒜𝓑)`, plus the contribution at
/// irregular infinity in closed form. Returns the value and a resonance
/// report (the closed form stays valid under resonance).
pub fn varpi_residue_form(
    state: &FlowState,
    dt: &TimeDirection,
) -> Result<(C, ResonanceReport), FlowError> {
    let space = &state.space;
    let gamma = state.gamma();
    let mut total = cr(0.0);

    // finite-pole part: ϖ_i = [Tr((A t_i + B + T) R_i) + Σ_{j≠i} Tr(R_i R_j)/(t_i − t_j)] δt_i
    if let Some(inf) = state.fourier.infinity_part() {
        let res = state.residues();
        let a_u = space.compress(&space.a_matrix(&state.fourier), inf);
        let b_u = space.compress(&space.off_diagonal(gamma), inf);
        let t_u = space.compress(&state.t_finite(), inf);
        let inf_nodes: Vec<usize> = res
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, &(j, _))| j == inf)
            .map(|(k, _)| k)
            .collect();
        for &k in &inf_nodes {
            let (_, kk) = res.nodes[k];
            let ti = state.times.value(inf, kk);
            let dti = dt.0[inf][kk];
            let mut h = linalg::trace(&((&a_u * ti + &b_u + &t_u) * &res.r[k]));
            for &l in &inf_nodes {
                if l == k {
                    continue;
                }
                let (_, ll) = res.nodes[l];
                let tj = state.times.value(inf, ll);
                h += linalg::trace(&(&res.r[k] * &res.r[l])) / (ti - tj);
            }
            total += h * dti;
        }
    }

    // contribution at infinity, Tr(g₁ dT) in closed form
    total += varpi_infinity(state, dt)?;
    Ok((total, resonance_report(state)))
}

/// The closed form of `ϖ_∞ = Tr(g₁ dT)`:
/// `Tr(Q T_∞ P δT) + Tr([X, QP] δT) − Tr(X T X δT) + Tr(X² T δT)
///  − Tr(X B X δT) + ½Tr(δ(QP)~ δ(QP)) + Tr(δ(QP)~ δ(XB)) + ½Tr(δ(XB)~ δ(XB))`.
pub fn varpi_infinity(state: &FlowState, dt: &TimeDirection) -> Result<C, FlowError> {
    let space = &state.space;
    let gamma = state.gamma();
    let x = state.x_matrix();
    let tu = state.t_finite();
    let dtu = state.dt_finite(dt);
    let tinf = state.t_infinity();
    let qp = match state.fourier.infinity_part() {
        Some(inf) => {
            let mut proj = zeros(space.dim(), space.dim());
            for idx in space.part_range(inf) {
                proj[(idx, idx)] = cr(1.0);
            }
            gamma * &proj * gamma
        }
        None => zeros(space.dim(), space.dim()),
    };
    let qcp = gamma * &tinf * gamma;
    let t1 = linalg::trace(&(&qcp * &dtu));
    let t2 = linalg::trace(&(linalg::commutator(&x, &qp) * &dtu));
    let t3 = -linalg::trace(&(&x * &tu * &x * &dtu));
    let t4 = linalg::trace(&(&x * &x * &tu * &dtu));
    let xb = &x * gamma;
    let t5 = -linalg::trace(&(&x * gamma * &x * &dtu));
    let dqp = space.delta(&qp);
    let dxb = space.delta(&xb);
    let tdqp = tilde(space, &state.times, &dqp, dt)?;
    let tdxb = tilde(space, &state.times, &dxb, dt)?;
    let t6 = linalg::trace(&(&tdqp * &dqp)) * 0.5;
    let t7 = linalg::trace(&(&tdqp * &dxb));
    let t8 = linalg::trace(&(&tdxb * &dxb)) * 0.5;
    Ok(t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8)
}

/// The Hamiltonian term `Tr(Γ Ξ θ)` of the gauge transformation
/// `exp(λ T̂²/2)` with one multiplier per part, where `θ = λ T̂ δT̂`.
pub fn gauge_term(
    state: &FlowState,
    multipliers: &[C],
    dt: &TimeDirection,
) -> Result<C, FlowError> {
    let space = &state.space;
    if multipliers.len() != space.part_count() {
        return Err(FlowError::Phase(PhaseError::Shape {
            expected: space.part_count(),
            got: multipliers.len(),
        }));
    }
    let mut theta = state.times.t_hat(space);
    let dth = dt.t_hat(space);
    for j in 0..space.part_count() {
        for idx in space.part_range(j) {
            theta[(idx, idx)] *= multipliers[j] * dth[(idx, idx)];
        }
    }
    Ok(linalg::trace(&(state.gamma() * state.xi() * theta)))
}
