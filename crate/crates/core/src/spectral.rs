//! Bivariate spectral polynomials `det(αλ + βz − γ)` and their behaviour
//! under linear changes of the `(λ, z)` coordinates.

use crate::linalg::{self, cr, zeros, CMat, C};
use crate::phase::Mobius;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("matrices must be square of equal dimension")]
    DimensionMismatch,
}

/// A polynomial in two variables: `coeffs[(m, n)]` is the coefficient of
/// `λ^m z^n`. Trailing all-zero rows and columns are trimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct BivarPoly {
    coeffs: CMat,
}

impl BivarPoly {
    pub fn new(coeffs: CMat) -> Self {
        BivarPoly { coeffs }.trimmed()
    }

    pub fn zero() -> Self {
        BivarPoly {
            coeffs: zeros(1, 1),
        }
    }

    pub fn coeffs(&self) -> &CMat {
        &self.coeffs
    }

    pub fn coeff(&self, lambda_deg: usize, z_deg: usize) -> C {
        if lambda_deg < self.coeffs.nrows() && z_deg < self.coeffs.ncols() {
            self.coeffs[(lambda_deg, z_deg)]
        } else {
            cr(0.0)
        }
    }

    pub fn lambda_degree(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    pub fn z_degree(&self) -> usize {
        self.coeffs.ncols() - 1
    }

    pub fn eval(&self, lambda: C, z: C) -> C {
        // Horner in λ, inner Horner in z
        let mut acc = cr(0.0);
        for m in (0..self.coeffs.nrows()).rev() {
            let mut row = cr(0.0);
            for n in (0..self.coeffs.ncols()).rev() {
                row = row * z + self.coeffs[(m, n)];
            }
            acc = acc * lambda + row;
        }
        acc
    }

    pub fn scale(&self, k: C) -> BivarPoly {
        BivarPoly {
            coeffs: &self.coeffs * k,
        }
    }

    fn trimmed(mut self) -> Self {
        let tol = 1e-12 * linalg::max_abs(&self.coeffs).max(1.0);
        let mut rows = self.coeffs.nrows();
        while rows > 1
            && (0..self.coeffs.ncols()).all(|n| self.coeffs[(rows - 1, n)].norm() <= tol)
        {
            rows -= 1;
        }
        let mut cols = self.coeffs.ncols();
        while cols > 1 && (0..rows).all(|m| self.coeffs[(m, cols - 1)].norm() <= tol) {
            cols -= 1;
        }
        self.coeffs = self.coeffs.view((0, 0), (rows, cols)).into_owned();
        self
    }

    /// Largest coefficient magnitude; a natural scale for comparisons.
    pub fn magnitude(&self) -> f64 {
        linalg::max_abs(&self.coeffs)
    }

    /// Relative distance `max |p − q| / max(1, |p|, |q|)` on the common
    /// coefficient grid.
    pub fn distance(&self, other: &BivarPoly) -> f64 {
        let rows = self.coeffs.nrows().max(other.coeffs.nrows());
        let cols = self.coeffs.ncols().max(other.coeffs.ncols());
        let mut worst: f64 = 0.0;
        for m in 0..rows {
            for n in 0..cols {
                worst = worst.max((self.coeff(m, n) - other.coeff(m, n)).norm());
            }
        }
        worst / self.magnitude().max(other.magnitude()).max(1.0)
    }
}

/// `det(αλ + βz − γ)` by evaluation on a roots-of-unity grid and inverse
/// DFT: the determinant has degree at most n in each variable, so an
/// `(n+1) × (n+1)` tensor grid determines it exactly.
pub fn spectral_poly(alpha: &CMat, beta: &CMat, gamma: &CMat) -> Result<BivarPoly, SpectralError> {
    let n = alpha.nrows();
    if alpha.ncols() != n
        || beta.nrows() != n
        || beta.ncols() != n
        || gamma.nrows() != n
        || gamma.ncols() != n
    {
        return Err(SpectralError::DimensionMismatch);
    }
    if n == 0 {
        return Ok(BivarPoly::new(CMat::from_element(1, 1, cr(1.0))));
    }
    let pts = n + 1;
    let root = C::from_polar(1.0, 2.0 * std::f64::consts::PI / pts as f64);
    let nodes: Vec<C> = (0..pts).map(|k| root.powu(k as u32)).collect();
    let mut values = zeros(pts, pts);
    for (a, &la) in nodes.iter().enumerate() {
        for (b, &zb) in nodes.iter().enumerate() {
            let m = alpha * la + beta * zb - gamma;
            values[(a, b)] = m.lu().determinant();
        }
    }
    // coefficients by 2D inverse DFT on the unit-circle tensor grid
    let mut coeffs = zeros(pts, pts);
    let norm = cr(1.0 / (pts * pts) as f64);
    for m in 0..pts {
        for nn in 0..pts {
            let mut acc = cr(0.0);
            for a in 0..pts {
                for b in 0..pts {
                    let phase = root.powu(((m * a + nn * b) % pts) as u32).conj();
                    acc += values[(a, b)] * phase;
                }
            }
            coeffs[(m, nn)] = acc * norm;
        }
    }
    Ok(BivarPoly::new(coeffs))
}

/// Substitute the linear coordinate change induced by
/// `(∂, z) ↦ (a∂ + bz, c∂ + dz)`: the polynomial pulls back along
/// `(λ, z) ↦ (aλ + bz, cλ + dz)`.
pub fn gl2_transform_poly(g: &Mobius, p: &BivarPoly) -> BivarPoly {
    let rows = p.coeffs().nrows();
    let cols = p.coeffs().ncols();
    let out_deg = (rows - 1) + (cols - 1) + 1;
    let mut out = zeros(out_deg.max(1), out_deg.max(1));
    // powers of (aλ + bz) and (cλ + dz) as coefficient matrices
    let lin = |u: C, v: C| {
        let mut m = zeros(2, 2);
        m[(1, 0)] = u;
        m[(0, 1)] = v;
        m
    };
    let mul = |x: &CMat, y: &CMat| -> CMat {
        let mut z = zeros(x.nrows() + y.nrows() - 1, x.ncols() + y.ncols() - 1);
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                if x[(i, j)].norm() == 0.0 {
                    continue;
                }
                for k in 0..y.nrows() {
                    for l in 0..y.ncols() {
                        let add = x[(i, j)] * y[(k, l)];
                        z[(i + k, j + l)] += add;
                    }
                }
            }
        }
        z
    };
    let one = CMat::from_element(1, 1, cr(1.0));
    let mut lam_pows = vec![one.clone()];
    for _ in 1..rows {
        let last = lam_pows.last().unwrap();
        lam_pows.push(mul(last, &lin(g.a, g.b)));
    }
    let mut z_pows = vec![one];
    for _ in 1..cols {
        let last = z_pows.last().unwrap();
        z_pows.push(mul(last, &lin(g.c, g.d)));
    }
    for m in 0..rows {
        for n in 0..cols {
            let c0 = p.coeffs()[(m, n)];
            if c0.norm() == 0.0 {
                continue;
            }
            let term = mul(&lam_pows[m], &z_pows[n]);
            for i in 0..term.nrows() {
                for j in 0..term.ncols() {
                    let add = term[(i, j)] * c0;
                    out[(i, j)] += add;
                }
            }
        }
    }
    BivarPoly::new(out)
}
