//! Seeded random problem generators for tests and verification sweeps.
//!
//! Everything takes an explicit RNG so parallel sweeps stay reproducible.

use crate::linalg::{zeros, CMat, C};
use crate::phase::{FourierConfig, FourierPoint, GradedSpace, Mobius, PhasePoint, TimeConfig, TimeDirection};
use rand::Rng;

pub fn random_complex<R: Rng>(rng: &mut R, scale: f64) -> C {
    C::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_complex(rng, scale))
}

/// A full End(V)° matrix: random blocks off the part diagonal.
pub fn random_phase<R: Rng>(space: &GradedSpace, rng: &mut R, scale: f64) -> PhasePoint {
    let m = random_matrix(rng, space.dim(), space.dim(), scale);
    PhasePoint::new(space, m).expect("shape fixed by construction")
}

/// A tangent vector to the phase space (same shape as a phase point).
pub fn random_tangent<R: Rng>(space: &GradedSpace, rng: &mut R, scale: f64) -> CMat {
    space.off_diagonal(&random_matrix(rng, space.dim(), space.dim(), scale))
}

/// Well-separated random times: base points on a loose grid plus jitter, so
/// within-part gaps stay of order one.
pub fn random_times<R: Rng>(space: &GradedSpace, rng: &mut R) -> TimeConfig {
    let times = (0..space.part_count())
        .map(|j| {
            let n = space.node_dims()[j].len();
            (0..n)
                .map(|k| {
                    C::new(
                        k as f64 + rng.gen_range(-0.2..0.2),
                        rng.gen_range(-0.3..0.3),
                    )
                })
                .collect()
        })
        .collect();
    TimeConfig::new(times).expect("grid times are distinct")
}

pub fn random_direction<R: Rng>(times: &TimeConfig, rng: &mut R) -> TimeDirection {
    TimeDirection(
        times
            .values()
            .iter()
            .map(|p| (0..p.len()).map(|_| random_complex(rng, 1.0)).collect())
            .collect(),
    )
}

/// Random separated finite points, optionally with one part at ∞.
pub fn random_fourier<R: Rng>(parts: usize, with_infinity: bool, rng: &mut R) -> FourierConfig {
    let mut points = Vec::with_capacity(parts);
    let finite = if with_infinity { parts - 1 } else { parts };
    for j in 0..finite {
        points.push(FourierPoint::Finite(C::new(
            1.5 * j as f64 + rng.gen_range(-0.4..0.4),
            rng.gen_range(-0.5..0.5),
        )));
    }
    if with_infinity {
        points.push(FourierPoint::Infinity);
    }
    FourierConfig::new(points).expect("separated points")
}

/// A random SL₂(ℂ) element, normalised to determinant one.
pub fn random_mobius<R: Rng>(rng: &mut R) -> Mobius {
    loop {
        let a = random_complex(rng, 1.0);
        let b = random_complex(rng, 1.0);
        let c = random_complex(rng, 1.0);
        let d = random_complex(rng, 1.0);
        let det = a * d - b * c;
        if det.norm() > 0.2 {
            let s = det.sqrt();
            return Mobius::new(a / s, b / s, c / s, d / s).expect("unimodular by scaling");
        }
    }
}

/// Bundle of randomly generated compatible data on a fixed shape.
pub struct RandomConfig {
    pub fourier: FourierConfig,
    pub space: GradedSpace,
    pub phase: PhasePoint,
    pub times: TimeConfig,
}

/// Random configuration with `parts` parts, each with `nodes_per_part`
/// nodes of dimension up to `max_dim`.
pub fn random_config<R: Rng>(
    parts: usize,
    nodes_per_part: usize,
    max_dim: usize,
    with_infinity: bool,
    scale: f64,
    rng: &mut R,
) -> RandomConfig {
    let node_dims = (0..parts)
        .map(|_| (0..nodes_per_part).map(|_| rng.gen_range(1..=max_dim)).collect())
        .collect();
    let space = GradedSpace::new(node_dims);
    let fourier = random_fourier(parts, with_infinity, rng);
    let phase = random_phase(&space, rng, scale);
    let times = random_times(&space, rng);
    RandomConfig {
        fourier,
        space,
        phase,
        times,
    }
}

/// The two-part interval shape `J = {0, ∞}` with `A = B = 0`: part 0 is the
/// finite part at the origin, part 1 sits at infinity.
pub fn jmms_config<R: Rng>(
    dims_finite: &[usize],
    dims_infinity: &[usize],
    scale: f64,
    rng: &mut R,
) -> RandomConfig {
    let space = GradedSpace::new(vec![dims_finite.to_vec(), dims_infinity.to_vec()]);
    let fourier = FourierConfig::new(vec![
        FourierPoint::Finite(C::new(0.0, 0.0)),
        FourierPoint::Infinity,
    ])
    .expect("distinct points");
    let phase = random_phase(&space, rng, scale);
    let times = random_times(&space, rng);
    RandomConfig {
        fourier,
        space,
        phase,
        times,
    }
}

/// Schlesinger shape: the interval with the finite times frozen to zero
/// (a single node of dimension `rank` at the origin).
pub fn schlesinger_config<R: Rng>(
    rank: usize,
    dims_infinity: &[usize],
    scale: f64,
    rng: &mut R,
) -> RandomConfig {
    let space = GradedSpace::new(vec![vec![rank], dims_infinity.to_vec()]);
    let fourier = FourierConfig::new(vec![
        FourierPoint::Finite(C::new(0.0, 0.0)),
        FourierPoint::Infinity,
    ])
    .expect("distinct points");
    let phase = random_phase(&space, rng, scale);
    let mut times = vec![vec![C::new(0.0, 0.0)]];
    times.push(
        (0..dims_infinity.len())
            .map(|k| {
                C::new(
                    k as f64 + rng.gen_range(-0.2..0.2),
                    rng.gen_range(-0.3..0.3),
                )
            })
            .collect(),
    );
    RandomConfig {
        fourier,
        space,
        phase,
        times: TimeConfig::new(times).expect("distinct"),
    }
}

/// A block strictly-upper-triangular style phase point (graded by node order)
/// that is certainly reducible when at least two nodes are nonzero.
pub fn upper_triangular_phase<R: Rng>(space: &GradedSpace, rng: &mut R, scale: f64) -> PhasePoint {
    let nodes = space.nodes();
    let mut m = zeros(space.dim(), space.dim());
    for (si, &(js, ks)) in nodes.iter().enumerate() {
        for (di, &(jd, kd)) in nodes.iter().enumerate() {
            if js == jd || di >= si {
                continue; // keep only maps from later nodes to earlier ones
            }
            let rs = space.node_range(js, ks);
            let rd = space.node_range(jd, kd);
            for (rr, r) in rd.clone().enumerate() {
                for (cc, c) in rs.clone().enumerate() {
                    let _ = (rr, cc);
                    m[(r, c)] = random_complex(rng, scale);
                }
            }
        }
    }
    PhasePoint::new(space, m).expect("shape by construction")
}
