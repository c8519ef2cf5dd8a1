use num_complex::Complex;

use super::Potential;
use crate::error::{Error, Result};
use crate::poly::{ComplexPoly, RealPoly, MAX_VARS};
use crate::scalar::Real;

/// A potential moved into coordinates where it reads `|z|^2 + O(|z|^3)`.
#[derive(Clone, Debug)]
pub struct NormalizedChart<T: Real> {
    pub original: Potential<T>,
    /// Constant, linear and holomorphic-quadratic part of the original,
    /// in the original coordinates `u`.
    pub pluriharmonic: Potential<T>,
    /// `u = P z`, lower triangular so `{z_1 = 0}` is preserved.
    pub p: [[Complex<T>; 2]; 2],
    /// Hermitian matrix of the Levi form at 0, `gamma[j][k] = ∂²p/∂ū_j∂u_k`.
    pub gamma: [[Complex<T>; 2]; 2],
    pub phi: Potential<T>,
}

impl<T: Real> NormalizedChart<T> {
    pub fn dim(&self) -> usize {
        self.original.dim()
    }

    /// `P* Γ P`, which is the identity up to rounding.
    pub fn pulled_back_gamma(&self) -> [[Complex<T>; 2]; 2] {
        let n = self.dim();
        let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out[i][j] += self.p[k][i].conj() * self.gamma[k][l] * self.p[l][j];
                    }
                }
            }
        }
        out
    }

    /// Maps chart coordinates `z` to original coordinates `u = P z`.
    pub fn to_original(&self, z: &[T; 4]) -> [T; 4] {
        let mut u = [T::zero(); 4];
        for k in 0..self.dim() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..self.dim() {
                acc += self.p[k][j] * Complex::new(z[2 * j], z[2 * j + 1]);
            }
            u[2 * k] = acc.re;
            u[2 * k + 1] = acc.im;
        }
        u
    }
}

/// Real 4x4 matrix of `u = P z` acting on `(x1, y1, x2, y2)`.
fn real_matrix<T: Real>(p: &[[Complex<T>; 2]; 2], dim: usize) -> [[T; MAX_VARS]; MAX_VARS] {
    let mut m = [[T::zero(); MAX_VARS]; MAX_VARS];
    for k in 0..dim {
        for j in 0..dim {
            let c = p[k][j];
            m[2 * k][2 * j] = c.re;
            m[2 * k][2 * j + 1] = -c.im;
            m[2 * k + 1][2 * j] = c.im;
            m[2 * k + 1][2 * j + 1] = c.re;
        }
    }
    m
}

pub fn normalize_chart<T: Real>(p: &Potential<T>) -> Result<NormalizedChart<T>> {
    let n = p.dim();
    let zero = [T::zero(); 4];
    let czero = Complex::new(T::zero(), T::zero());
    let mut gamma = [[czero; 2]; 2];
    for (j, row) in gamma.iter_mut().enumerate().take(n) {
        for (k, g) in row.iter_mut().enumerate().take(n) {
            *g = p.complex_hessian(&zero, k, j);
        }
    }

    // Γ = Q* Q with Q lower triangular, then P = Q^{-1}.
    let tiny = T::epsilon() * T::lit(16.0);
    let not_psh = |what: &str| Error::NotStrictlyPsh(what.to_string());
    let mut pm = [[czero; 2]; 2];
    if n == 1 {
        let g = gamma[0][0].re;
        if !(g > tiny) {
            return Err(not_psh("Levi form vanishes"));
        }
        pm[0][0] = Complex::new(g.sqrt().recip(), T::zero());
    } else {
        let g22 = gamma[1][1].re;
        if !(g22 > tiny) {
            return Err(not_psh("Levi form degenerate in u_2"));
        }
        let q22 = g22.sqrt();
        let q21 = gamma[1][0] / q22;
        let rest = gamma[0][0].re - q21.norm_sqr();
        if !(rest > tiny) {
            return Err(not_psh("Levi form degenerate"));
        }
        let q11 = rest.sqrt();
        pm[0][0] = Complex::new(q11.recip(), T::zero());
        pm[1][1] = Complex::new(q22.recip(), T::zero());
        pm[1][0] = -q21 / (q11 * q22);
    }

    let quad = p.poly().homogeneous_part(2);
    let mut hermitian = RealPoly::zero();
    for j in 0..n {
        for k in 0..n {
            let zz = ComplexPoly::coordinate(j).mul(&ComplexPoly::coordinate(k).conj());
            let c = p.complex_hessian(&zero, j, k);
            hermitian = hermitian.add(&zz.re.scale(c.re)).sub(&zz.im.scale(c.im));
        }
    }
    let h = p
        .poly()
        .homogeneous_part(0)
        .add(&p.poly().homogeneous_part(1))
        .add(&quad.sub(&hermitian));

    let m = real_matrix(&pm, n);
    let raw = p.poly().sub(&h).linear_substitution(&m);
    let scale = raw
        .terms()
        .fold(T::zero(), |acc, (_, c)| acc.max(c.abs()))
        .max(T::one());
    let phi = raw.pruned(scale * T::epsilon() * T::lit(64.0));

    Ok(NormalizedChart {
        original: p.clone(),
        pluriharmonic: Potential::from_poly(n, h.pruned(T::zero())),
        p: pm,
        gamma,
        phi: Potential::from_poly(n, phi),
    })
}
