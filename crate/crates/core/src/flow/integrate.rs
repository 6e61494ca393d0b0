//! Fixed-step RK4 integration of the isomonodromy equations with
//! conservation monitors, Simpson accumulation of `log τ`, and the
//! finite-difference residuals used to verify the Hamiltonian structure.

use super::field::vector_field;
use super::{varpi, FlowError, FlowState};
use crate::linalg::{self, cr, zeros, CMat, C};
use crate::phase::{PhasePoint, TimeConfig, TimeDirection};
use serde::Serialize;

/// Tunables for [`integrate`]; defaults follow the documented choices
/// (step 1e-3, monitor warning at 1e-4, margin factor 10).
#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub step: f64,
    pub monitor_tol: f64,
    pub margin_factor: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            step: 1e-3,
            monitor_tol: 1e-4,
            margin_factor: 10.0,
        }
    }
}

/// One record along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySample {
    /// times per part per node, as (re, im)
    pub times: Vec<Vec<(f64, f64)>>,
    /// Γ entries, row-major (re, im)
    pub gamma: Vec<Vec<(f64, f64)>>,
    /// accumulated log τ
    pub log_tau: (f64, f64),
    /// max over nodes of ‖Λ_i(now) − Λ_i(start)‖
    pub lambda_drift: f64,
    /// max over nodes and powers k ≤ dim U_i of |Tr R_i^k(now) − Tr R_i^k(start)|
    pub trace_drift: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub final_state: FlowState,
    pub warnings: Vec<String>,
    pub aborted: bool,
}

fn complex_pairs(m: &CMat) -> Vec<Vec<(f64, f64)>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| (m[(r, c)].re, m[(r, c)].im)).collect())
        .collect()
}

fn sample_of(state: &FlowState, ref_lambda: &[CMat], ref_traces: &[Vec<C>]) -> TrajectorySample {
    let res = state.residues();
    let mut lambda_drift = 0.0f64;
    for (now, was) in res.lambda.iter().zip(ref_lambda) {
        lambda_drift = lambda_drift.max(linalg::max_abs(&(now - was)));
    }
    let mut trace_drift = 0.0f64;
    for (k, r) in res.r.iter().enumerate() {
        for (pw, was) in ref_traces[k].iter().enumerate() {
            let tr = linalg::trace(&linalg::mat_pow(r, pw + 1));
            trace_drift = trace_drift.max((tr - was).norm());
        }
    }
    TrajectorySample {
        times: state
            .times
            .values()
            .iter()
            .map(|p| p.iter().map(|t| (t.re, t.im)).collect())
            .collect(),
        gamma: complex_pairs(state.gamma()),
        log_tau: (state.log_tau.re, state.log_tau.im),
        lambda_drift,
        trace_drift,
    }
}

fn trace_powers(state: &FlowState) -> Vec<Vec<C>> {
    state
        .residues()
        .r
        .iter()
        .map(|r| {
            (1..=r.nrows())
                .map(|pw| linalg::trace(&linalg::mat_pow(r, pw)))
                .collect()
        })
        .collect()
}

fn times_at(start: &TimeConfig, delta: &TimeDirection, s: f64) -> Result<TimeConfig, FlowError> {
    Ok(TimeConfig::new(
        start
            .values()
            .iter()
            .zip(&delta.0)
            .map(|(base, d)| {
                base.iter()
                    .zip(d)
                    .map(|(t, dd)| t + dd * cr(s))
                    .collect()
            })
            .collect(),
    )?)
}

/// One RK4 step for Γ along the segment `T̂(s) = start + s·Δ`, from the
/// absolute parameter `s0` to `s0 + h`. The Γ value is taken from `state`;
/// the stage times always reference the segment start so `s` is absolute.
fn rk4_step(
    state: &FlowState,
    start_times: &TimeConfig,
    delta: &TimeDirection,
    s0: f64,
    h: f64,
) -> Result<CMat, FlowError> {
    let eval = |s: f64, gamma: &CMat| -> Result<CMat, FlowError> {
        let st = FlowState {
            fourier: state.fourier.clone(),
            space: state.space.clone(),
            phase: PhasePoint::new(&state.space, gamma.clone())?,
            times: times_at(start_times, delta, s)?,
            log_tau: cr(0.0),
        };
        vector_field(&st, delta)
    };
    let g0 = state.gamma().clone();
    let k1 = eval(s0, &g0)?;
    let k2 = eval(s0 + h / 2.0, &(&g0 + &k1 * cr(h / 2.0)))?;
    let k3 = eval(s0 + h / 2.0, &(&g0 + &k2 * cr(h / 2.0)))?;
    let k4 = eval(s0 + h, &(&g0 + &k3 * cr(h)))?;
    Ok(g0 + (k1 + k2 * cr(2.0) + k3 * cr(2.0) + k4) * cr(h / 6.0))
}

/// Integrate along a piecewise-linear path of time configurations. Each
/// segment is parameterised on [0, 1] and cut into `ceil(len/step)` RK4
/// steps, where `len` is the sup-norm time displacement; `log τ` is
/// accumulated by Simpson quadrature of the one-form along the solution,
/// with the midpoint state obtained by an RK4 half-step.
pub fn integrate(
    state: &FlowState,
    path: &[Vec<Vec<C>>],
    opts: &IntegrateOptions,
) -> Result<Trajectory, FlowError> {
    let mut current = state.clone();
    let ref_lambda = current.residues().lambda.clone();
    let ref_traces = trace_powers(&current);
    let mut samples = vec![sample_of(&current, &ref_lambda, &ref_traces)];
    let mut warnings = Vec::new();
    let mut aborted = false;
    'segments: for target in path {
        let delta = TimeDirection(
            target
                .iter()
                .zip(current.times.values())
                .map(|(t, b)| t.iter().zip(b).map(|(a, x)| a - x).collect())
                .collect(),
        );
        let speed = delta
            .0
            .iter()
            .flatten()
            .map(|d| d.norm())
            .fold(0.0, f64::max);
        if speed == 0.0 {
            continue;
        }
        let steps = (speed / opts.step).ceil().max(1.0) as usize;
        let h = 1.0 / steps as f64;
        let start_times = current.times.clone();
        for n in 0..steps {
            let s0 = n as f64 * h;
            // stay inside the admissible domain with a safety margin,
            // checking the raw candidate times before constructing them
            let margin = opts.margin_factor * opts.step * speed;
            let raw_next: Vec<Vec<C>> = start_times
                .values()
                .iter()
                .zip(&delta.0)
                .map(|(base, d)| {
                    base.iter()
                        .zip(d)
                        .map(|(t, dd)| t + dd * cr(s0 + h))
                        .collect()
                })
                .collect();
            let mut gap: Option<f64> = None;
            for part in &raw_next {
                for (k, t) in part.iter().enumerate() {
                    for ss in &part[k + 1..] {
                        let g = (t - ss).norm();
                        gap = Some(gap.map_or(g, |b: f64| b.min(g)));
                    }
                }
            }
            if let Some(g) = gap {
                if g <= margin {
                    warnings.push(format!(
                        "aborted: within-part time gap {g:.3e} under margin {margin:.3e}"
                    ));
                    aborted = true;
                    break 'segments;
                }
            }
            let next_times = TimeConfig::new(raw_next)?;
            // Simpson for log τ needs the midpoint state; the trajectory
            // itself advances by the full step from the original point
            let g_mid = rk4_step(&current, &start_times, &delta, s0, h / 2.0)?;
            let g_next = rk4_step(&current, &start_times, &delta, s0, h)?;
            let f0 = varpi(&current, &delta)?;
            let mid_state = FlowState {
                fourier: current.fourier.clone(),
                space: current.space.clone(),
                phase: PhasePoint::new(&current.space, g_mid)?,
                times: times_at(&start_times, &delta, s0 + h / 2.0)?,
                log_tau: cr(0.0),
            };
            let f_mid = varpi(&mid_state, &delta)?;
            current = FlowState {
                fourier: current.fourier.clone(),
                space: current.space.clone(),
                phase: PhasePoint::new(&current.space, g_next)?,
                times: next_times,
                log_tau: current.log_tau,
            };
            let f1 = varpi(&current, &delta)?;
            current.log_tau += (f0 + f_mid * cr(4.0) + f1) * cr(h / 6.0);
        }
        let s = sample_of(&current, &ref_lambda, &ref_traces);
        if s.lambda_drift > opts.monitor_tol || s.trace_drift > opts.monitor_tol {
            warnings.push(format!(
                "conservation monitor breach: lambda drift {:.3e}, trace drift {:.3e}",
                s.lambda_drift, s.trace_drift
            ));
        }
        samples.push(s);
    }
    Ok(Trajectory {
        samples,
        final_state: current,
        warnings,
        aborted,
    })
}

/// Complex-linear gradient of a scalar function of Γ by central differences
/// over every off-diagonal entry, returned so that `dH(u) = Tr(∇H · u)`.
pub fn gradient_fd<F>(state: &FlowState, h: f64, f: F) -> Result<CMat, FlowError>
where
    F: Fn(&FlowState) -> Result<C, FlowError>,
{
    let space = &state.space;
    let parts = space.part_of_index();
    let n = space.dim();
    let mut grad = zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if parts[r] == parts[c] {
                continue;
            }
            let bump = |sign: f64| -> Result<C, FlowError> {
                let mut g = state.gamma().clone();
                g[(r, c)] += cr(sign * h);
                let st = FlowState {
                    fourier: state.fourier.clone(),
                    space: space.clone(),
                    phase: PhasePoint::new(space, g)?,
                    times: state.times.clone(),
                    log_tau: cr(0.0),
                };
                f(&st)
            };
            let d = (bump(1.0)? - bump(-1.0)?) / cr(2.0 * h);
            // dH(E_rc) = Tr(∇H E_rc) = (∇H)_{c r}
            grad[(c, r)] = d;
        }
    }
    Ok(grad)
}

/// The flow field attached to a scalar Hamiltonian by finite differences.
/// With `ω(u, v) = Tr(φ(u) v)` and the flows running along `−v_H` for
/// `dH = ω(·, v_H)`, the field driving `dΓ/dt` is `+φ⁻¹(∇H)`.
pub fn hamiltonian_field_fd<F>(state: &FlowState, h: f64, f: F) -> Result<CMat, FlowError>
where
    F: Fn(&FlowState) -> Result<C, FlowError>,
{
    let grad = gradient_fd(state, h, f)?;
    Ok(state.space.apply_phi_inverse(&state.fourier, &grad))
}

/// FD residuals of the integrability structure for a pair of node times:
/// the curvature function `f_ij = ∂H_j/∂t_i − ∂H_i/∂t_j + {H_i, H_j}`, the
/// symmetry residual `|∂H_i/∂t_j − ∂H_j/∂t_i|` and the bracket `|{H_i,H_j}|`.
#[derive(Debug, Clone, Copy)]
pub struct IntegrabilityResiduals {
    pub f_ij: f64,
    pub symmetry: f64,
    pub bracket: f64,
}

pub fn integrability_residuals(
    state: &FlowState,
    node_i: (usize, usize),
    node_j: (usize, usize),
    h: f64,
) -> Result<IntegrabilityResiduals, FlowError> {
    let ei = TimeDirection::unit(&state.times, node_i.0, node_i.1);
    let ej = TimeDirection::unit(&state.times, node_j.0, node_j.1);
    let ham = |dir: &TimeDirection, st: &FlowState| -> Result<C, FlowError> { varpi(st, dir) };
    // ∂H_j/∂t_i at fixed Γ
    let shift = |node: (usize, usize), sign: f64| -> Result<FlowState, FlowError> {
        let mut times = state.times.values().to_vec();
        times[node.0][node.1] += cr(sign * h);
        Ok(FlowState {
            fourier: state.fourier.clone(),
            space: state.space.clone(),
            phase: state.phase.clone(),
            times: TimeConfig::new(times)?,
            log_tau: cr(0.0),
        })
    };
    let dhj_dti = (ham(&ej, &shift(node_i, 1.0)?)? - ham(&ej, &shift(node_i, -1.0)?)?) / cr(2.0 * h);
    let dhi_dtj = (ham(&ei, &shift(node_j, 1.0)?)? - ham(&ei, &shift(node_j, -1.0)?)?) / cr(2.0 * h);
    let vi = hamiltonian_field_fd(state, h, |st| varpi(st, &ei))?;
    let vj = hamiltonian_field_fd(state, h, |st| varpi(st, &ej))?;
    let bracket = crate::phase::omega(&state.space, &state.fourier, &vi, &vj)?;
    Ok(IntegrabilityResiduals {
        f_ij: (dhj_dti - dhi_dtj + bracket).norm(),
        symmetry: (dhi_dtj - dhj_dti).norm(),
        bracket: bracket.norm(),
    })
}

/// Γ transported to shifted times by RK4 along a straight segment with
/// `substeps` steps.
fn transport(state: &FlowState, delta: &TimeDirection, substeps: usize) -> Result<FlowState, FlowError> {
    let mut current = state.clone();
    let h = 1.0 / substeps as f64;
    let start_times = current.times.clone();
    for n in 0..substeps {
        let g = rk4_step(&current, &start_times, delta, n as f64 * h, h)?;
        current = FlowState {
            fourier: current.fourier.clone(),
            space: current.space.clone(),
            phase: PhasePoint::new(&current.space, g)?,
            times: times_at(&start_times, delta, (n + 1) as f64 * h)?,
            log_tau: cr(0.0),
        };
    }
    Ok(current)
}

/// Curvature residual of the full connection over an `h × h` square in the
/// `(t_i, t_j)` plane, by central finite differences of the components
/// along integrated sections: both the `dt_i`–`dt_j` component
/// `∂_i 𝓑_j − ∂_j 𝓑_i + [𝓑_j, 𝓑_i]` and the `dz`–`dt_i` components
/// `∂_i 𝓑 − ∂_z 𝓑_i + [𝓑, 𝓑_i]`, evaluated at `z`. O(h²) for horizontal
/// sections of a flat connection.
pub fn curvature_residual(
    state: &FlowState,
    node_i: (usize, usize),
    node_j: (usize, usize),
    z: C,
    h: f64,
) -> Result<f64, FlowError> {
    let substeps = 24;
    let mut dir_i = TimeDirection::unit(&state.times, node_i.0, node_i.1);
    let mut dir_j = TimeDirection::unit(&state.times, node_j.0, node_j.1);
    for part in dir_i.0.iter_mut().chain(dir_j.0.iter_mut()) {
        for v in part.iter_mut() {
            *v *= cr(h);
        }
    }
    let flat_index = |node: (usize, usize)| -> usize {
        state
            .space
            .nodes()
            .iter()
            .position(|&n| n == node)
            .expect("node exists")
    };
    let fi = flat_index(node_i);
    let fj = flat_index(node_j);
    let neg = |d: &TimeDirection| TimeDirection(
        d.0.iter().map(|p| p.iter().map(|v| -v).collect()).collect(),
    );
    let at = |d: &TimeDirection| -> Result<super::connection::ConnectionEval, FlowError> {
        let st = transport(state, d, substeps)?;
        super::connection::full_connection(&st, z)
    };
    let base = super::connection::full_connection(state, z)?;
    let ip = at(&dir_i)?;
    let im = at(&neg(&dir_i))?;
    let jp = at(&dir_j)?;
    let jm = at(&neg(&dir_j))?;
    // ∂_i 𝓑_j − ∂_j 𝓑_i + [𝓑_j, 𝓑_i]
    let d_i_bj = (&ip.b_t[fj] - &im.b_t[fj]) / cr(2.0 * h);
    let d_j_bi = (&jp.b_t[fi] - &jm.b_t[fi]) / cr(2.0 * h);
    let mut worst = linalg::max_abs(
        &(d_i_bj - d_j_bi + linalg::commutator(&base.b_t[fj], &base.b_t[fi])),
    );
    // ∂_i 𝓑 − ∂_z 𝓑_i + [𝓑, 𝓑_i], with ∂_z by central differences in z
    let hz = h;
    let zp = super::connection::full_connection(state, z + cr(hz))?;
    let zm = super::connection::full_connection(state, z - cr(hz))?;
    for (f, plus, minus) in [(fi, &ip, &im), (fj, &jp, &jm)] {
        let d_t_b = (&plus.b_z - &minus.b_z) / cr(2.0 * h);
        let d_z_bi = (&zp.b_t[f] - &zm.b_t[f]) / cr(2.0 * hz);
        worst = worst.max(linalg::max_abs(
            &(d_t_b - d_z_bi + linalg::commutator(&base.b_z, &base.b_t[f])),
        ));
    }
    Ok(worst)
}
