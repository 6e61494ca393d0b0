use super::gauge_series::g1_by_series;
use crate::flow::connection::{full_connection, local_connection};
use crate::flow::field::{
    block_field, frozen_finite_field, frozen_infinity_field, harnad_dual, harnad_dual_direction,
    harnad_dual_tangent, interval_field, lift_residues, master_field, projected_field,
    vector_field,
};
use crate::flow::integrate::{
    curvature_residual, hamiltonian_field_fd, integrability_residuals, integrate,
    IntegrateOptions,
};
use crate::flow::normal_form::varpi_infinity_from_g1;
use crate::flow::{tilde, varpi, varpi_infinity, varpi_residue_form, FlowState};
use crate::graph::SupernovaGraph;
use crate::linalg::{self, c, cr, eye, max_abs, zeros, CMat};
use crate::orbits::{
    contract_orbit, expand_orbit, jordan_of_matrix, marking_to_lambda_d, realize_leg,
    specialize_marking, JordanData, Marking,
};
use crate::phase::{is_stable, omega, sl2_act, Mobius, Stability, TimeConfig, TimeDirection};
use crate::root::{reflect_param, reflect_root, ParamVector, RootVector};
use crate::sampling;
use crate::spectral::{gl2_transform_poly, spectral_poly};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub tolerance: f64,
    pub error: f64,
    pub passed: bool,
    pub trials: usize,
}

impl Check {
    fn new(name: &str, tolerance: f64, error: f64, trials: usize) -> Self {
        Check {
            name: name.to_owned(),
            tolerance,
            error,
            passed: error <= tolerance,
            trials,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Algebraic,
    Flow,
    Sl2,
    Spectral,
    Orbits,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "algebraic" => Ok(Suite::Algebraic),
            "flow" => Ok(Suite::Flow),
            "sl2" => Ok(Suite::Sl2),
            "spectral" => Ok(Suite::Spectral),
            "orbits" => Ok(Suite::Orbits),
            "all" => Ok(Suite::All),
            other => Err(format!(
                "unknown suite {other:?}: expected algebraic|flow|sl2|spectral|orbits|all"
            )),
        }
    }
}

/// Worst value of `f` over `trials` independently seeded runs, fanned out
/// over `threads` workers in contiguous chunks (deterministic: the result
/// is a max over per-trial values that only depend on their own seed).
fn max_over_trials<F>(seed: u64, trials: usize, threads: usize, f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    if trials == 0 {
        return 0.0;
    }
    let threads = threads.max(1).min(trials);
    let chunk = trials.div_ceil(threads);
    let mut worst = 0.0f64;
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(trials);
            let f = &f;
            handles.push(scope.spawn(move || {
                let mut local = 0.0f64;
                for trial in lo..hi {
                    local = local.max(f(seed.wrapping_add(trial as u64)));
                }
                local
            }));
        }
        for h in handles {
            worst = worst.max(h.join().expect("verification worker"));
        }
    });
    worst
}

fn random_state(rng: &mut StdRng, with_infinity: bool) -> FlowState {
    let cfg = sampling::random_config(3, 2, 2, with_infinity, 0.8, rng);
    FlowState::new(cfg.fourier, cfg.space, cfg.phase, cfg.times)
}

fn jmms_state(rng: &mut StdRng) -> FlowState {
    let cfg = sampling::jmms_config(&[2, 1], &[1, 2], 0.8, rng);
    FlowState::new(cfg.fourier, cfg.space, cfg.phase, cfg.times)
}

fn schlesinger_state(rng: &mut StdRng, poles: usize) -> FlowState {
    let cfg = sampling::schlesinger_config(2, &vec![1; poles], 0.8, rng);
    FlowState::new(cfg.fourier, cfg.space, cfg.phase, cfg.times)
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(1.0)
}

pub fn run_suite(suite: Suite, seed: u64, trials: usize, threads: usize) -> Vec<Check> {
    match suite {
        Suite::Algebraic => algebraic_suite(seed, trials, threads),
        Suite::Flow => flow_suite(seed, trials, threads),
        Suite::Sl2 => sl2_suite(seed, trials, threads),
        Suite::Spectral => spectral_suite(seed, trials, threads),
        Suite::Orbits => orbits_suite(seed, trials, threads),
        Suite::All => {
            let mut out = algebraic_suite(seed, trials, threads);
            out.extend(sl2_suite(seed, trials, threads));
            out.extend(spectral_suite(seed, trials, threads));
            out.extend(orbits_suite(seed, trials, threads));
            out.extend(flow_suite(seed, trials, threads));
            out
        }
    }
}

pub fn algebraic_suite(seed: u64, trials: usize, threads: usize) -> Vec<Check> {
    let mut checks = Vec::new();

    checks.push(Check::new(
        "interval specialization: general field equals the lifted interval equations",
        1e-12,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = jmms_state(&mut rng);
            let dt = sampling::random_direction(&st.times, &mut rng);
            let a = vector_field(&st, &dt).unwrap();
            let b = interval_field(&st, &dt).unwrap();
            rel(max_abs(&(&a - &b)), max_abs(&a))
        }),
        trials,
    ));

    checks.push(Check::new(
        "frozen-finite specialization (Schlesinger shape)",
        1e-12,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = schlesinger_state(&mut rng, 3);
            let mut dt = TimeDirection::zero_like(&st.times);
            for k in 0..3 {
                dt.0[1][k] = sampling::random_complex(&mut rng, 1.0);
            }
            let a = vector_field(&st, &dt).unwrap();
            let b = frozen_finite_field(&st, &dt).unwrap();
            rel(max_abs(&(&a - &b)), max_abs(&a))
        }),
        trials,
    ));

    checks.push(Check::new(
        "frozen-irregular specialization (dual shape)",
        1e-12,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let cfg = sampling::jmms_config(&[2, 1], &[2], 0.8, &mut rng);
            let mut st = FlowState::new(cfg.fourier, cfg.space, cfg.phase, cfg.times);
            st.times = TimeConfig::new(vec![st.times.values()[0].clone(), vec![cr(0.0)]]).unwrap();
            let mut dt = TimeDirection::zero_like(&st.times);
            for k in 0..2 {
                dt.0[0][k] = sampling::random_complex(&mut rng, 1.0);
            }
            let a = vector_field(&st, &dt).unwrap();
            let b = frozen_infinity_field(&st, &dt).unwrap();
            rel(max_abs(&(&a - &b)), max_abs(&a))
        }),
        trials,
    ));

    checks.push(Check::new(
        "no-infinity (master) specialization",
        1e-11,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = random_state(&mut rng, false);
            let dt = sampling::random_direction(&st.times, &mut rng);
            let a = vector_field(&st, &dt).unwrap();
            let b = master_field(&st, &dt).unwrap();
            rel(max_abs(&(&a - &b)), max_abs(&a))
        }),
        trials,
    ));

    checks.push(Check::new(
        "componentwise block form of the field",
        1e-11,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = random_state(&mut rng, s % 2 == 0);
            let dt = sampling::random_direction(&st.times, &mut rng);
            let a = vector_field(&st, &dt).unwrap();
            let b = block_field(&st, &dt).unwrap();
            rel(max_abs(&(&a - &b)), max_abs(&a))
        }),
        trials,
    ));

    checks.push(Check::new(
        "one-form equals its residue assembly",
        1e-8,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = random_state(&mut rng, true);
            let dt = sampling::random_direction(&st.times, &mut rng);
            let a = varpi(&st, &dt).unwrap();
            let (b, _) = varpi_residue_form(&st, &dt).unwrap();
            rel((a - b).norm(), a.norm())
        }),
        trials,
    ));

    checks.push(Check::new(
        "trace relation: sum of node residues vanishes",
        1e-12,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = random_state(&mut rng, s % 2 == 0);
            let res = st.residues();
            let total: crate::linalg::C = res.lambda.iter().map(linalg::trace).sum();
            rel(total.norm(), max_abs(st.gamma()).powi(2))
        }),
        trials,
    ));

    checks.push(Check::new(
        "shear changes the one-form by -c Tr(PQ T dT) exactly",
        1e-10,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = random_state(&mut rng, true);
            let dt = sampling::random_direction(&st.times, &mut rng);
            let shear = sampling::random_complex(&mut rng, 1.0);
            let img = sl2_act(&Mobius::shear(shear), &st.space, &st.fourier, &st.phase, &st.times)
                .unwrap();
            let sheared = FlowState::new(img.fourier, st.space.clone(), img.phase, img.times);
            let before = varpi(&st, &dt).unwrap();
            let after = varpi(&sheared, &dt).unwrap();
            let inf = st.fourier.infinity_part().unwrap();
            let mut proj = zeros(st.space.dim(), st.space.dim());
            for idx in st.space.part_range(inf) {
                proj[(idx, idx)] = cr(1.0);
            }
            let pq = &proj * st.gamma() * st.gamma() * &proj;
            let predicted =
                -shear * linalg::trace(&(&pq * st.t_infinity() * st.dt_infinity(&dt)));
            rel(((after - before) - predicted).norm(), before.norm())
        }),
        trials,
    ));

    checks.push(Check::new(
        "duality push-forward preserves the equations",
        1e-12,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = jmms_state(&mut rng);
            let dual = harnad_dual(&st).unwrap();
            let dt = sampling::random_direction(&st.times, &mut rng);
            let vf = vector_field(&st, &dt).unwrap();
            let lhs = harnad_dual_tangent(&st, &vf).unwrap();
            let rhs = vector_field(&dual, &harnad_dual_direction(&st, &dt).unwrap()).unwrap();
            rel(max_abs(&(&lhs - &rhs)), max_abs(&rhs))
        }),
        trials,
    ));

    checks.push(Check::new(
        "duality agrees with the Fourier-Laplace move",
        1e-12,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = jmms_state(&mut rng);
            let dual = harnad_dual(&st).unwrap();
            let img = sl2_act(
                &Mobius::fourier_laplace(),
                &st.space,
                &st.fourier,
                &st.phase,
                &st.times,
            )
            .unwrap();
            // after the move part 0 is at ∞; the dual lists the old ∞ part
            // first, so compare blocks across the relabelling
            let rf = st.space.part_range(0);
            let ri = st.space.part_range(1);
            let r0 = dual.space.part_range(0);
            let r1 = dual.space.part_range(1);
            let img_q = img
                .phase
                .matrix()
                .view((ri.start, rf.start), (ri.len(), rf.len()))
                .into_owned();
            let img_p = img
                .phase
                .matrix()
                .view((rf.start, ri.start), (rf.len(), ri.len()))
                .into_owned();
            let dual_q = dual
                .phase
                .matrix()
                .view((r0.start, r1.start), (r0.len(), r1.len()))
                .into_owned();
            let dual_p = dual
                .phase
                .matrix()
                .view((r1.start, r0.start), (r1.len(), r0.len()))
                .into_owned();
            max_abs(&(&img_q - &dual_q)).max(max_abs(&(&img_p - &dual_p)))
        }),
        trials,
    ));

    checks.push(Check::new(
        "projected equations depend only on the residues",
        1e-10,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let r: Vec<CMat> = (0..2)
                .map(|_| {
                    let q = sampling::random_matrix(&mut rng, 3, 2, 1.0);
                    let p = sampling::random_matrix(&mut rng, 2, 3, 1.0);
                    &q * &p
                })
                .collect();
            let times_inf = [cr(0.1), c(1.2, 0.4)];
            let lift1 = lift_residues(&[3], &[cr(0.0)], &r, &times_inf, None).unwrap();
            let gauges: Vec<CMat> = (0..2)
                .map(|_| sampling::random_matrix(&mut rng, 2, 2, 0.5) + eye(2) * cr(2.0))
                .collect();
            let lift2 = lift_residues(&[3], &[cr(0.0)], &r, &times_inf, Some(&gauges)).unwrap();
            let dt = sampling::random_direction(&lift1.times, &mut rng);
            let p1 = projected_field(&lift1, &dt).unwrap();
            let p2 = projected_field(&lift2, &dt).unwrap();
            let mut worst = max_abs(&(&p1.db - &p2.db));
            for (a, b) in p1.dr.iter().zip(&p2.dr) {
                worst = worst.max(rel(max_abs(&(a - b)), max_abs(a)));
            }
            worst
        }),
        trials,
    ));

    checks.push(Check::new(
        "restriction of the full connection matches the local one-forms",
        1e-10,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = random_state(&mut rng, true);
            let inf = st.fourier.infinity_part().unwrap();
            let res = st.residues();
            let dt = sampling::random_direction(&st.times, &mut rng);
            let nodes = st.space.nodes();
            let mut worst: f64 = 0.0;
            for (flat, &(j, k)) in nodes.iter().enumerate() {
                if j != inf {
                    continue;
                }
                let ti = st.times.value(j, k);
                let a_u = st.space.compress(&st.space.a_matrix(&st.fourier), inf);
                let b_u = st.space.compress(&st.space.off_diagonal(st.gamma()), inf);
                let t_u = st.space.compress(&st.t_finite(), inf);
                let mut restricted = (a_u * ti + b_u + t_u) * dt.0[j][k];
                for (l, &(jl, kl)) in nodes.iter().enumerate() {
                    if jl == inf && l != flat {
                        let tl = st.times.value(jl, kl);
                        restricted += &res.r[l] * ((dt.0[j][k] - dt.0[jl][kl]) / (ti - tl));
                    }
                }
                // finite-node components are affine in z: interpolate two
                // evaluations to get their value at z = t_i exactly
                let z0 = c(10.3, 7.1);
                let z1 = c(-9.7, -6.3);
                let c0 = full_connection(&st, z0).unwrap();
                let c1 = full_connection(&st, z1).unwrap();
                for (l, &(jl, kl)) in nodes.iter().enumerate() {
                    if jl == inf {
                        continue;
                    }
                    let v = &c0.b_t[l] + (&c1.b_t[l] - &c0.b_t[l]) * ((ti - z0) / (z1 - z0));
                    restricted += v * dt.0[jl][kl];
                }
                let local = local_connection(&st, (j, k), &dt).unwrap();
                worst = worst.max(rel(max_abs(&(&restricted - &local)), max_abs(&local)));
            }
            worst
        }),
        trials,
    ));

    checks.push(Check::new(
        "pairing symmetry of the tilde operation",
        1e-12,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let cfg = sampling::random_config(2, 3, 2, false, 1.0, &mut rng);
            let dt = sampling::random_direction(&cfg.times, &mut rng);
            let dim = cfg.space.dim();
            let f = cfg.space.delta(&sampling::random_matrix(&mut rng, dim, dim, 1.0));
            let r = cfg.space.delta(&sampling::random_matrix(&mut rng, dim, dim, 1.0));
            let lhs = linalg::trace(&(tilde(&cfg.space, &cfg.times, &f, &dt).unwrap() * &r));
            let rhs = linalg::trace(&(&f * tilde(&cfg.space, &cfg.times, &r, &dt).unwrap()));
            rel((lhs - rhs).norm(), lhs.norm())
        }),
        trials,
    ));

    checks
}

pub fn sl2_suite(seed: u64, trials: usize, threads: usize) -> Vec<Check> {
    let mut checks = Vec::new();
    fn generator_check(
        name: &str,
        pick: fn(&mut StdRng) -> Mobius,
        seed: u64,
        trials: usize,
        threads: usize,
    ) -> Check {
        Check::new(
            name,
            1e-10,
            max_over_trials(seed, trials, threads, move |s| {
                let mut rng = StdRng::seed_from_u64(s);
                let cfg = sampling::random_config(3, 2, 3, s % 2 == 0, 0.8, &mut rng);
                let g = pick(&mut rng);
                let img = match sl2_act(&g, &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times) {
                    Ok(i) => i,
                    Err(_) => return 0.0,
                };
                let u = sampling::random_tangent(&cfg.space, &mut rng, 1.0);
                let v = sampling::random_tangent(&cfg.space, &mut rng, 1.0);
                let before = omega(&cfg.space, &cfg.fourier, &u, &v).unwrap();
                let after = omega(
                    &cfg.space,
                    &img.fourier,
                    &(&img.multiplier * &u),
                    &(&img.multiplier * &v),
                )
                .unwrap();
                rel((after - before).norm(), before.norm())
            }),
            trials,
        )
    }
    checks.push(generator_check(
        "symplectic form equivariance: scaling",
        |rng| Mobius::scaling(sampling::random_complex(rng, 1.0) + cr(1.5)),
        seed,
        trials,
        threads,
    ));
    checks.push(generator_check(
        "symplectic form equivariance: shear",
        |rng| Mobius::shear(sampling::random_complex(rng, 1.0)),
        seed,
        trials,
        threads,
    ));
    checks.push(generator_check(
        "symplectic form equivariance: Fourier-Laplace",
        |_| Mobius::fourier_laplace(),
        seed,
        trials,
        threads,
    ));
    checks.push(generator_check(
        "symplectic form equivariance: random group element",
        sampling::random_mobius,
        seed,
        trials,
        threads,
    ));

    checks.push(Check::new(
        "group action round trip returns the data",
        1e-10,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let cfg = sampling::random_config(3, 2, 2, s % 2 == 0, 0.8, &mut rng);
            let g = sampling::random_mobius(&mut rng);
            let img = match sl2_act(&g, &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times) {
                Ok(i) => i,
                Err(_) => return 0.0,
            };
            let back =
                match sl2_act(&g.inverse(), &cfg.space, &img.fourier, &img.phase, &img.times) {
                    Ok(b) => b,
                    Err(_) => return 0.0,
                };
            let blow = 1.0 + max_abs(img.phase.matrix());
            max_abs(&(back.phase.matrix() - cfg.phase.matrix())) / blow
        }),
        trials,
    ));

    checks.push(Check::new(
        "moment map values and residue orbits preserved",
        1e-9,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let cfg = sampling::random_config(2, 2, 2, true, 0.8, &mut rng);
            let g = sampling::random_mobius(&mut rng);
            let img = match sl2_act(&g, &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times) {
                Ok(i) => i,
                Err(_) => return 0.0,
            };
            let before = crate::phase::residues(&cfg.space, &cfg.fourier, &cfg.phase);
            let after = crate::phase::residues(&cfg.space, &img.fourier, &img.phase);
            let mut worst: f64 = 0.0;
            for k in 0..before.lambda.len() {
                let blow = 1.0 + max_abs(&after.lambda[k]);
                worst = worst.max(max_abs(&(&before.lambda[k] - &after.lambda[k])) / blow);
                for pw in 1..=before.r[k].nrows() {
                    let t1 = linalg::trace(&linalg::mat_pow(&before.r[k], pw));
                    let t2 = linalg::trace(&linalg::mat_pow(&after.r[k], pw));
                    worst = worst.max(rel((t1 - t2).norm(), t1.norm()));
                }
            }
            worst
        }),
        trials,
    ));

    checks
}

/// Reassemble the normalized pencil (α, β, γ) of a configuration.
pub fn pencil_of(cfg: &sampling::RandomConfig) -> (CMat, CMat, CMat) {
    let n = cfg.space.dim();
    let mut alpha = eye(n);
    let mut beta = -cfg.space.a_matrix(&cfg.fourier);
    if let Some(inf) = cfg.fourier.infinity_part() {
        for idx in cfg.space.part_range(inf) {
            alpha[(idx, idx)] = cr(0.0);
            beta[(idx, idx)] = cr(1.0);
        }
    }
    let gamma = cfg.phase.matrix() + cfg.times.t_hat(&cfg.space);
    (alpha, beta, gamma)
}

pub fn spectral_suite(seed: u64, trials: usize, threads: usize) -> Vec<Check> {
    let mut checks = Vec::new();

    checks.push(Check::new(
        "spectral polynomial factors through the connection matrix",
        1e-8,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let cfg = sampling::random_config(2, 1, 2, true, 0.8, &mut rng);
            let (alpha, beta, gamma) = pencil_of(&cfg);
            let p = spectral_poly(&alpha, &beta, &gamma).unwrap();
            let inf = cfg.fourier.infinity_part().unwrap();
            let scale = p.magnitude().max(1.0);
            let mut worst: f64 = 0.0;
            for k in 0..25 {
                let lam = c(0.37 * k as f64 - 1.1, 0.21 * (k % 5) as f64);
                let z = c(1.7 - 0.23 * k as f64, 0.4 + 0.11 * (k % 7) as f64);
                let b = match crate::phase::connection_matrix(
                    &cfg.space,
                    &cfg.fourier,
                    &cfg.phase,
                    &cfg.times,
                    z,
                ) {
                    Ok(b) => b,
                    Err(_) => continue,
                };
                let mut detc = cr(1.0);
                for (kk, &t) in cfg.times.values()[inf].iter().enumerate() {
                    for _ in cfg.space.node_range(inf, kk) {
                        detc *= z - t;
                    }
                }
                let dety = (eye(b.nrows()) * lam - &b).lu().determinant();
                worst = worst.max(
                    (p.eval(lam, z) - detc * dety).norm() / (scale * (1.0 + (detc * dety).norm())),
                );
            }
            worst
        }),
        trials,
    ));

    checks.push(Check::new(
        "spectral polynomial transforms by coordinate change and a constant",
        1e-8,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let cfg = sampling::random_config(2, 1, 2, s % 2 == 0, 0.8, &mut rng);
            let g = sampling::random_mobius(&mut rng);
            let (alpha, beta, gamma) = pencil_of(&cfg);
            let p = spectral_poly(&alpha, &beta, &gamma).unwrap();
            let img = match sl2_act(&g, &cfg.space, &cfg.fourier, &cfg.phase, &cfg.times) {
                Ok(i) => i,
                Err(_) => return 0.0,
            };
            let cfg2 = sampling::RandomConfig {
                fourier: img.fourier,
                space: cfg.space.clone(),
                phase: img.phase,
                times: img.times,
            };
            let (a2, b2, g2) = pencil_of(&cfg2);
            let q = spectral_poly(&a2, &b2, &g2).unwrap();
            let pulled = gl2_transform_poly(&g, &p);
            let det_eps = img.multiplier.lu().determinant();
            q.distance(&pulled.scale(det_eps))
        }),
        trials,
    ));

    checks.push(Check::new(
        "coefficients of the spectral polynomial Poisson-commute",
        1e-6,
        max_over_trials(seed, trials.min(10), threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let cfg = sampling::random_config(2, 1, 2, true, 0.7, &mut rng);
            let st = FlowState::new(cfg.fourier, cfg.space, cfg.phase, cfg.times);
            let coeff_fn = |m: usize, n: usize| {
                move |state: &FlowState| -> Result<crate::linalg::C, crate::flow::FlowError> {
                    let cfg = sampling::RandomConfig {
                        fourier: state.fourier.clone(),
                        space: state.space.clone(),
                        phase: state.phase.clone(),
                        times: state.times.clone(),
                    };
                    let (a, b, g) = pencil_of(&cfg);
                    Ok(spectral_poly(&a, &b, &g).unwrap().coeff(m, n))
                }
            };
            let mut worst: f64 = 0.0;
            for ((m1, n1), (m2, n2)) in [((0, 0), (1, 0)), ((0, 1), (1, 1)), ((0, 0), (0, 1))] {
                let v1 = hamiltonian_field_fd(&st, 1e-5, coeff_fn(m1, n1)).unwrap();
                let v2 = hamiltonian_field_fd(&st, 1e-5, coeff_fn(m2, n2)).unwrap();
                let bracket = omega(&st.space, &st.fourier, &v1, &v2).unwrap();
                let scale = (max_abs(&v1) * max_abs(&v2)).max(1.0);
                worst = worst.max(bracket.norm() / scale);
            }
            worst
        }),
        trials.min(10),
    ));

    checks
}

pub fn flow_suite(seed: u64, trials: usize, threads: usize) -> Vec<Check> {
    let mut checks = Vec::new();

    checks.push(Check::new(
        "field is Hamiltonian for the one-form",
        1e-5,
        max_over_trials(seed, trials.min(8), threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let cfg = sampling::jmms_config(&[2], &[1, 1], 0.8, &mut rng);
            let st = FlowState::new(cfg.fourier, cfg.space, cfg.phase, cfg.times);
            let dt = sampling::random_direction(&st.times, &mut rng);
            let direct = vector_field(&st, &dt).unwrap();
            let fd = hamiltonian_field_fd(&st, 1e-5, |x| varpi(x, &dt)).unwrap();
            rel(max_abs(&(&direct - &fd)), max_abs(&direct))
        }),
        trials.min(8),
    ));

    checks.push(Check::new(
        "Hamiltonians commute and cross-derivatives match",
        1e-6,
        max_over_trials(seed, trials.min(10), threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = jmms_state(&mut rng);
            let scale = max_abs(st.gamma()).max(1.0);
            let r = integrability_residuals(&st, (0, 0), (1, 0), 1e-4).unwrap();
            let r2 = integrability_residuals(&st, (1, 0), (1, 1), 1e-4).unwrap();
            (r.bracket.max(r.symmetry).max(r.f_ij))
                .max(r2.bracket.max(r2.symmetry).max(r2.f_ij))
                / scale
        }),
        trials.min(10),
    ));

    checks.push(Check::new(
        "conservation along an integrated trajectory",
        1e-8,
        max_over_trials(seed, trials.min(3), threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = schlesinger_state(&mut rng, 3);
            let mut target: Vec<Vec<crate::linalg::C>> = st.times.values().to_vec();
            target[1][0] += cr(0.3);
            target[1][2] += c(-0.1, 0.2);
            let traj = integrate(
                &st,
                &[target],
                &IntegrateOptions {
                    step: 1e-3,
                    ..Default::default()
                },
            )
            .unwrap();
            let last = traj.samples.last().unwrap();
            last.lambda_drift.max(last.trace_drift)
        }),
        trials.min(3),
    ));

    checks.push(Check::new(
        "flatness: curvature residual decays at order >= 1.9",
        1e-9,
        max_over_trials(seed, trials.min(2), threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = jmms_state(&mut rng);
            let z = c(3.7, 1.9);
            let r1 = curvature_residual(&st, (1, 0), (1, 1), z, 1e-2).unwrap();
            let r2 = curvature_residual(&st, (1, 0), (1, 1), z, 5e-3).unwrap();
            let slope = (r1 / r2).log2();
            (1.9 - slope).max(0.0)
        }),
        trials.min(2),
    ));

    checks.push(Check::new(
        "closed-loop log tau decays at order >= 3.5 under step halving",
        1e-9,
        max_over_trials(seed, 1, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            // three poles: with only two the loop defect is exactly zero
            // (log tau is then a logarithm, an exact differential)
            let st = schlesinger_state(&mut rng, 3);
            let run = |step: f64| -> f64 {
                let base: Vec<Vec<crate::linalg::C>> = st.times.values().to_vec();
                let mut p1 = base.clone();
                p1[1][0] += cr(0.4);
                let mut p2 = p1.clone();
                p2[1][1] += c(0.0, 0.4);
                let mut p3 = p2.clone();
                p3[1][0] -= cr(0.4);
                let mut p4 = p3.clone();
                p4[1][1] -= c(0.0, 0.4);
                let traj = integrate(
                    &st,
                    &[p1, p2, p3, p4, base],
                    &IntegrateOptions {
                        step,
                        ..Default::default()
                    },
                )
                .unwrap();
                traj.final_state.log_tau.norm()
            };
            let d1 = run(4e-3);
            let d2 = run(2e-3);
            let slope = (d1 / d2).log2();
            (3.5 - slope).max(0.0)
        }),
        1,
    ));

    checks.push(Check::new(
        "leading term matches the independent gauge-series oracle",
        1e-9,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let st = random_state(&mut rng, s % 2 == 0);
            let dt = sampling::random_direction(&st.times, &mut rng);
            match g1_by_series(&st).unwrap() {
                Some(g1) => {
                    let direct = varpi_infinity(&st, &dt).unwrap();
                    let keep: Vec<usize> = match st.fourier.infinity_part() {
                        Some(j) => st.space.complement_indices(j),
                        None => (0..st.space.dim()).collect(),
                    };
                    let dtu_full = st.dt_finite(&dt);
                    let dtu = CMat::from_fn(keep.len(), keep.len(), |r, cc| {
                        dtu_full[(keep[r], keep[cc])]
                    });
                    let via_series = linalg::trace(&(&g1 * &dtu));
                    let closed = varpi_infinity_from_g1(&st, &dt).unwrap();
                    rel((direct - via_series).norm(), direct.norm())
                        .max(rel((closed - via_series).norm(), closed.norm()))
                }
                None => 0.0, // resonant sample: the generic recursion is blocked
            }
        }),
        trials,
    ));

    checks
}

pub fn orbits_suite(seed: u64, trials: usize, threads: usize) -> Vec<Check> {
    let mut checks = Vec::new();

    checks.push(Check::new(
        "rank-shift duality of QP and PQ Jordan types",
        0.5,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let jd = random_integer_jordan(&mut rng, 6);
            let n = jd.dim();
            let j = jd.representative();
            let g = sampling::random_matrix(&mut rng, n, n, 1.0);
            let m = match linalg::inverse(&g) {
                Some(gi) => &g * j * gi,
                None => return 0.0,
            };
            let qmat = linalg::column_space(&m);
            let pmat = qmat.adjoint() * &m;
            let pq = &pmat * &qmat;
            let predicted = contract_orbit(&jd);
            let measured = jordan_of_matrix(&pq, 0.25);
            if predicted == measured {
                0.0
            } else {
                1.0
            }
        }),
        trials,
    ));

    checks.push(Check::new(
        "leg realizations satisfy the moment-map chain",
        1e-9,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let jd = random_integer_jordan(&mut rng, 5);
            let marking = Marking::minimal(&jd);
            if marking.0.is_empty() {
                return 0.0;
            }
            let real = realize_leg(&jd, &marking).unwrap();
            real.moment_residuals().into_iter().fold(0.0, f64::max)
        }),
        trials,
    ));

    checks.push(Check::new(
        "expand inverts contract",
        0.5,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let jd = random_integer_jordan(&mut rng, 6);
            let c0 = contract_orbit(&jd);
            if expand_orbit(&c0, jd.dim()).unwrap() == jd {
                0.0
            } else {
                1.0
            }
        }),
        trials,
    ));

    checks.push(Check::new(
        "leg reflection equals swapping marking roots",
        1e-12,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let jd = random_integer_jordan(&mut rng, 5);
            let marking = Marking::minimal(&jd);
            let w = marking.0.len();
            if w < 2 {
                return 0.0;
            }
            let (lam, dims) = marking_to_lambda_d(&jd, &marking).unwrap();
            let graph = SupernovaGraph::build(&[1], &[w - 1]).unwrap();
            let lam_vec = ParamVector(lam);
            let dim_vec = RootVector(dims.iter().map(|&d| d as i64).collect());
            // reflect at chain position p (1-based, p >= 2): swap ξ_{p−1}, ξ_p
            let p = 2 + (s as usize % (w - 1));
            if (marking.0[p - 1] - marking.0[p - 2]).norm() == 0.0 {
                return 0.0; // not admissible at λ_p = 0
            }
            let node = p - 1;
            let lam_r = reflect_param(graph.graph(), node, &lam_vec).unwrap();
            let dim_r = reflect_root(graph.graph(), node, &dim_vec).unwrap();
            let mut swapped = marking.clone();
            swapped.0.swap(p - 2, p - 1);
            let (lam2, dims2) = marking_to_lambda_d(&jd, &swapped).unwrap();
            let mut worst: f64 = 0.0;
            for (a, b) in lam_r.0.iter().zip(&lam2) {
                worst = worst.max((a - b).norm());
            }
            for (a, b) in dim_r.0.iter().zip(&dims2) {
                if *a != *b as i64 {
                    worst = worst.max(1.0);
                }
            }
            worst
        }),
        trials,
    ));

    checks.push(Check::new(
        "special marking annihilates the dual residue",
        1e-7,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let n = rng.gen_range(3..=5);
            let k = rng.gen_range(1..n);
            let q = sampling::random_matrix(&mut rng, n, k, 1.0);
            let p = sampling::random_matrix(&mut rng, k, n, 1.0);
            if linalg::rank(&q) < k || linalg::rank(&p) < k {
                return 0.0;
            }
            let lam = -(&p * &q);
            let marking = Marking::minimal(&jordan_of_matrix(&lam, 1e-6));
            let special = specialize_marking(&marking);
            let r = &q * &p;
            let mut prod = eye(n);
            for xi in &special.0 {
                prod = &prod * &(&r - eye(n) * *xi);
            }
            let scale = max_abs(&r).max(1.0).powi(special.0.len() as i32);
            max_abs(&prod) / scale
        }),
        trials,
    ));

    checks.push(Check::new(
        "stable points factor residues with the predicted Jordan shift",
        0.5,
        max_over_trials(seed, trials, threads, |s| {
            let mut rng = StdRng::seed_from_u64(s);
            let cfg = sampling::random_config(2, 2, 2, true, 1.0, &mut rng);
            if !matches!(
                is_stable(&cfg.space, &cfg.phase, 8, s),
                Stability::ProbablyIrreducible
            ) {
                return 0.0;
            }
            let res = crate::phase::residues(&cfg.space, &cfg.fourier, &cfg.phase);
            let mut worst: f64 = 0.0;
            for k in 0..res.r.len() {
                let di = res.q[k].ncols();
                if linalg::rank(&res.q[k]) < di || linalg::rank(&res.p[k]) < di {
                    worst = worst.max(1.0);
                    continue;
                }
                let predicted = contract_orbit(&jordan_of_matrix(&res.r[k], 1e-6));
                let measured = jordan_of_matrix(&(-&res.lambda[k]), 1e-6);
                if predicted != measured {
                    worst = worst.max(1.0);
                }
            }
            worst
        }),
        trials,
    ));

    checks
}

/// Random Jordan data with eigenvalues in {−1, 0, 0, 1, 2} and total size
/// up to `max_dim`.
fn random_integer_jordan(rng: &mut StdRng, max_dim: usize) -> JordanData {
    let n = rng.gen_range(2..=max_dim);
    let evs = [-1.0, 0.0, 0.0, 1.0, 2.0];
    let mut merged: Vec<(crate::linalg::C, Vec<usize>)> = Vec::new();
    let mut left = n;
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
    JordanData::new(merged).expect("valid partitions by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_with_small_trial_counts() {
        for suite in [
            Suite::Algebraic,
            Suite::Sl2,
            Suite::Spectral,
            Suite::Orbits,
            Suite::Flow,
        ] {
            let checks = run_suite(suite, 20260809, 4, 2);
            for check in &checks {
                assert!(
                    check.passed,
                    "{:?} check failed: {} (error {:.3e}, tol {:.3e})",
                    suite, check.name, check.error, check.tolerance
                );
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let a = run_suite(Suite::Algebraic, 7, 6, 1);
        let b = run_suite(Suite::Algebraic, 7, 6, 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert!((x.error - y.error).abs() <= f64::EPSILON * x.error.abs().max(1.0));
        }
    }
}
