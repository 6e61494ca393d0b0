//! Dense complex matrix helpers shared by the whole crate.
//!
//! Everything downstream works with `DMatrix<Complex64>` at desk scale
//! (dimensions in the tens), so the utilities here favour clarity over
//! asymptotics. Ranks are singular-value counts with a relative threshold,
//! eigenvalues come from the complex Schur form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C = Complex64;
pub type CMat = DMatrix<C>;
pub type CVec = DVector<C>;

/// Relative threshold used for all rank decisions.
pub const RANK_RTOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn cr(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Max absolute entry; zero matrices (or empty ones) give 0.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMat) -> C {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Rank via singular values with relative threshold `RANK_RTOL * max_sv`.
pub fn rank(m: &CMat) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let top = svd.singular_values.max();
    if top <= 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_RTOL * top)
        .count()
}

/// Rank with an absolute singular-value cutoff; use when the matrix may be
/// numerically zero relative to an external data scale.
pub fn rank_with(m: &CMat, atol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().filter(|&&s| s > atol).count()
}

/// Orthonormal column-space basis with an absolute singular-value cutoff.
pub fn column_space_with(m: &CMat, atol: f64) -> CMat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let r = svd.singular_values.iter().filter(|&&s| s > atol).count();
    u.columns(0, r).into_owned()
}

/// Eigenvalues of a square complex matrix: Householder reduction to
/// Hessenberg form followed by Wilkinson-shifted QR with deflation.
/// (Hand-rolled because the library Schur iteration does not converge on
/// complex matrices with zero subdiagonals, e.g. the zero matrix.)
pub fn eigenvalues(m: &CMat) -> Vec<C> {
    assert_eq!(m.nrows(), m.ncols());
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![m[(0, 0)]];
    }
    let scale = max_abs(m);
    if scale == 0.0 {
        return vec![C::new(0.0, 0.0); n];
    }
    let mut h = hessenberg(m);
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n; // active block is 0..hi
    let mut stuck = 0usize;
    let deflate_tol = |a: C, b: C| 1e-14 * (a.norm() + b.norm()) + 1e-15 * scale;
    while hi > 0 {
        // kill negligible subdiagonals
        for k in 1..hi {
            if h[(k, k - 1)].norm() <= deflate_tol(h[(k - 1, k - 1)], h[(k, k)]) {
                h[(k, k - 1)] = C::new(0.0, 0.0);
            }
        }
        if hi == 1 || h[(hi - 1, hi - 2)].norm() == 0.0 {
            eigs.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            stuck = 0;
            continue;
        }
        // unreduced block lo..hi
        let mut lo = hi - 1;
        while lo > 0 && h[(lo, lo - 1)].norm() != 0.0 {
            lo -= 1;
        }
        stuck += 1;
        let sigma = if stuck % 16 == 0 {
            // exceptional shift to break symmetry cycles
            h[(hi - 1, hi - 2)] * C::new(1.1, 0.31)
        } else {
            wilkinson_shift(
                h[(hi - 2, hi - 2)],
                h[(hi - 2, hi - 1)],
                h[(hi - 1, hi - 2)],
                h[(hi - 1, hi - 1)],
            )
        };
        if stuck > 40 * n {
            // give up on further refinement; Hessenberg diagonal is the best
            // available estimate at this point
            for k in (0..hi).rev() {
                eigs.push(h[(k, k)]);
            }
            break;
        }
        qr_step(&mut h, lo, hi, sigma);
    }
    eigs
}

/// Reduce to upper Hessenberg form by Householder reflections.
fn hessenberg(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        // build the reflector killing column k below the subdiagonal
        let mut v: Vec<C> = (k + 1..n).map(|r| h[(r, k)]).collect();
        let xnorm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if v[0].norm() == 0.0 {
            C::new(1.0, 0.0)
        } else {
            v[0] / v[0].norm()
        };
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        // H ← (I − 2vv*) H (I − 2vv*) on the trailing rows/columns
        for c in 0..n {
            let dot: C = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * h[(k + 1 + i, c)])
                .sum();
            for (i, vi) in v.iter().enumerate() {
                let delta = *vi * dot * 2.0;
                h[(k + 1 + i, c)] -= delta;
            }
        }
        for r in 0..n {
            let dot: C = v
                .iter()
                .enumerate()
                .map(|(i, vi)| h[(r, k + 1 + i)] * *vi)
                .sum();
            for (i, vi) in v.iter().enumerate() {
                let delta = dot * vi.conj() * 2.0;
                h[(r, k + 1 + i)] -= delta;
            }
        }
    }
    h
}

/// Eigenvalue of [[a, b], [c, d]] closest to d.
fn wilkinson_shift(a: C, b: C, c: C, d: C) -> C {
    let tr = a + d;
    let disc = ((a - d) * (a - d) + b * c * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit shifted QR sweep on the Hessenberg block `lo..hi`.
fn qr_step(h: &mut CMat, lo: usize, hi: usize, sigma: C) {
    let givens_of = |a: C, b: C| -> Option<(C, C)> {
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if r == 0.0 {
            return None;
        }
        Some((a / r, b / r))
    };
    for k in lo..hi {
        h[(k, k)] -= sigma;
    }
    let n = h.ncols();
    let mut rots: Vec<Option<(C, C)>> = Vec::with_capacity(hi - lo - 1);
    for k in lo..hi - 1 {
        let rot = givens_of(h[(k, k)], h[(k + 1, k)]);
        if let Some((w1, w2)) = rot {
            // rows k, k+1 ← G · rows, with G = [[w1*, w2*], [−w2, w1]]
            for c in k..n {
                let x = h[(k, c)];
                let y = h[(k + 1, c)];
                h[(k, c)] = w1.conj() * x + w2.conj() * y;
                h[(k + 1, c)] = -w2 * x + w1 * y;
            }
        }
        rots.push(rot);
    }
    for (k, rot) in (lo..hi - 1).zip(&rots) {
        if let Some((w1, w2)) = rot {
            // columns k, k+1 ← columns · Gᴴ
            let top = (k + 2).min(hi);
            for r in lo..top {
                let x = h[(r, k)];
                let y = h[(r, k + 1)];
                h[(r, k)] = x * *w1 + y * *w2;
                h[(r, k + 1)] = -x * w2.conj() + y * w1.conj();
            }
        }
    }
    for k in lo..hi {
        h[(k, k)] += sigma;
    }
}

/// Orthonormal basis of the null space of `m`, as matrix columns.
pub fn null_space(m: &CMat) -> CMat {
    let rows = m.nrows();
    let cols = m.ncols();
    if rows == 0 || cols == 0 {
        return eye(cols);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("svd with v_t requested");
    let top = svd.singular_values.max();
    let r = if top <= 0.0 {
        0
    } else {
        svd.singular_values
            .iter()
            .filter(|&&s| s > RANK_RTOL * top)
            .count()
    };
    // rows r.. of V^H span the kernel; conjugate-transpose them back.
    let mut basis = zeros(cols, cols - r);
    for (kcol, row) in (r..vt.nrows()).enumerate() {
        for j in 0..cols {
            basis[(j, kcol)] = vt[(row, j)].conj();
        }
    }
    basis
}

/// Null-space basis with an absolute singular-value cutoff.
pub fn null_space_with(m: &CMat, atol: f64) -> CMat {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        return eye(cols);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("svd with v_t requested");
    let r = svd.singular_values.iter().filter(|&&s| s > atol).count();
    let mut basis = zeros(cols, cols - r);
    for (kcol, row) in (r..vt.nrows()).enumerate() {
        for j in 0..cols {
            basis[(j, kcol)] = vt[(row, j)].conj();
        }
    }
    basis
}

/// Orthonormal basis of the column space, as matrix columns.
pub fn column_space(m: &CMat) -> CMat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let top = svd.singular_values.max();
    let r = if top <= 0.0 {
        0
    } else {
        svd.singular_values
            .iter()
            .filter(|&&s| s > RANK_RTOL * top)
            .count()
    };
    u.columns(0, r).into_owned()
}

/// Solve `a x = b` by LU with partial pivoting.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

/// Moore–Penrose pseudo-inverse (used for projections onto column spaces).
pub fn pinv(m: &CMat) -> CMat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return zeros(m.ncols(), m.nrows());
    }
    m.clone()
        .svd(true, true)
        .pseudo_inverse(RANK_RTOL * max_abs(m).max(1.0))
        .expect("pseudo inverse")
}

/// Matrix power by repeated multiplication (small exponents only).
pub fn mat_pow(m: &CMat, k: usize) -> CMat {
    let n = m.nrows();
    let mut out = eye(n);
    for _ in 0..k {
        out = &out * m;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_null_space_agree() {
        // rank-2 3x3 with a known kernel vector (1, -2, 1)
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                cr(1.0),
                cr(2.0),
                cr(3.0),
                cr(4.0),
                cr(5.0),
                cr(6.0),
                cr(7.0),
                cr(8.0),
                cr(9.0),
            ],
        );
        assert_eq!(rank(&m), 2);
        let ker = null_space(&m);
        assert_eq!(ker.ncols(), 1);
        assert!(max_abs(&(&m * &ker)) < 1e-10);
    }

    #[test]
    fn eigenvalues_of_defective_matrix() {
        let m = CMat::from_row_slice(2, 2, &[cr(3.0), cr(1.0), cr(0.0), cr(3.0)]);
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((ev[0] - cr(3.0)).norm() < 1e-7);
        assert!((ev[1] - cr(3.0)).norm() < 1e-7);
    }

    #[test]
    fn column_space_spans_image() {
        let m = CMat::from_row_slice(3, 2, &[cr(1.0), cr(2.0), cr(2.0), cr(4.0), cr(0.0), cr(1.0)]);
        let cs = column_space(&m);
        assert_eq!(cs.ncols(), 2);
        // projecting m onto the column space leaves it unchanged
        let proj = &cs * (cs.adjoint() * &m);
        assert!(max_abs(&(&proj - &m)) < 1e-10);
    }
}
