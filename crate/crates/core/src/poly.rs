//! Sparse real polynomials in the real coordinates `(x1, y1, x2, y2)`.
//!
//! Potentials are compiled into this form so that values, gradients and
//! Hessians are exact, and linear changes of complex coordinates stay closed.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::scalar::Real;

/// Maximum number of real variables (two complex dimensions).
pub const MAX_VARS: usize = 4;

pub type Exponents = [u8; MAX_VARS];

#[derive(Clone, Debug, PartialEq)]
pub struct RealPoly<T: Real> {
    terms: BTreeMap<Exponents, T>,
}

impl<T: Real> Default for RealPoly<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> RealPoly<T> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: T) -> Self {
        Self::monomial(c, [0; MAX_VARS])
    }

    pub fn monomial(c: T, exps: Exponents) -> Self {
        let mut p = Self::zero();
        p.add_term(exps, c);
        p
    }

    /// The coordinate `x_var` as a polynomial.
    pub fn var(var: usize) -> Self {
        let mut e = [0; MAX_VARS];
        e[var] = 1;
        Self::monomial(T::one(), e)
    }

    fn add_term(&mut self, exps: Exponents, c: T) {
        if c == T::zero() {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(T::zero());
        *entry += c;
        if *entry == T::zero() {
            self.terms.remove(&exps);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &T)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &Exponents) -> T {
        self.terms.get(exps).copied().unwrap_or(T::zero())
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Highest variable index that appears, plus one.
    pub fn num_vars(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().rposition(|&k| k > 0).map_or(0, |i| i + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = Self::zero();
        for (e, &c) in &self.terms {
            out.add_term(*e, c * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(*e, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let mut e = [0u8; MAX_VARS];
                for k in 0..MAX_VARS {
                    e[k] = ea[k] + eb[k];
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(T::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero();
        for (e, &c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = *e;
            d[var] -= 1;
            out.add_term(d, c * T::from_usize_lossy(e[var] as usize));
        }
        out
    }

    /// Antiderivative in `var` with zero constant of integration.
    pub fn antiderivative(&self, var: usize) -> Self {
        let mut out = Self::zero();
        for (e, &c) in &self.terms {
            let mut d = *e;
            d[var] += 1;
            out.add_term(d, c / T::from_usize_lossy(d[var] as usize));
        }
        out
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (e, &c) in &self.terms {
            let mut m = c;
            for (k, &p) in e.iter().enumerate() {
                if p > 0 {
                    m = m * x[k].powi(p as i32);
                }
            }
            acc += m;
        }
        acc
    }

    /// Part of total degree exactly `d`.
    pub fn homogeneous_part(&self, d: usize) -> Self {
        let mut out = Self::zero();
        for (e, &c) in &self.terms {
            if e.iter().map(|&k| k as usize).sum::<usize>() == d {
                out.add_term(*e, c);
            }
        }
        out
    }

    /// Substitutes `x_k -> sum_j m[k][j] x_j` for every variable.
    pub fn linear_substitution(&self, m: &[[T; MAX_VARS]; MAX_VARS]) -> Self {
        let forms: Vec<Self> = (0..MAX_VARS)
            .map(|k| {
                let mut f = Self::zero();
                for (j, &coef) in m[k].iter().enumerate() {
                    let mut e = [0u8; MAX_VARS];
                    e[j] = 1;
                    f.add_term(e, coef);
                }
                f
            })
            .collect();
        let mut out = Self::zero();
        for (e, &c) in &self.terms {
            let mut term = Self::constant(c);
            for k in 0..MAX_VARS {
                if e[k] > 0 {
                    term = term.mul(&forms[k].pow(e[k] as u32));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Drops coefficients below `eps` in absolute value.
    pub fn pruned(&self, eps: T) -> Self {
        let mut out = Self::zero();
        for (e, &c) in &self.terms {
            if c.abs() > eps {
                out.add_term(*e, c);
            }
        }
        out
    }
}

/// A complex-valued polynomial carried as a pair of real polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPoly<T: Real> {
    pub re: RealPoly<T>,
    pub im: RealPoly<T>,
}

impl<T: Real> ComplexPoly<T> {
    pub fn constant(c: Complex<T>) -> Self {
        Self {
            re: RealPoly::constant(c.re),
            im: RealPoly::constant(c.im),
        }
    }

    /// The complex coordinate `z_j = x_j + i y_j`.
    pub fn coordinate(j: usize) -> Self {
        Self {
            re: RealPoly::var(2 * j),
            im: RealPoly::var(2 * j + 1),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: self.im.scale(-T::one()),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(Complex::new(T::one(), T::zero()));
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Multi-index power `z^m`.
    pub fn monomial(m: &[u32]) -> Self {
        let mut out = Self::constant(Complex::new(T::one(), T::zero()));
        for (j, &k) in m.iter().enumerate() {
            out = out.mul(&Self::coordinate(j).pow(k));
        }
        out
    }
}

/// `|z|^2 = sum_j x_j^2 + y_j^2` over the first `dim` complex coordinates.
pub fn norm_sq<T: Real>(dim: usize) -> RealPoly<T> {
    let mut p = RealPoly::zero();
    for v in 0..2 * dim {
        p = p.add(&RealPoly::var(v).pow(2));
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_cubed_real_part() {
        // Re(z^3) = x^3 - 3 x y^2
        let p = ComplexPoly::<f64>::monomial(&[3]).re;
        assert_eq!(p.coefficient(&[3, 0, 0, 0]), 1.0);
        assert_eq!(p.coefficient(&[1, 2, 0, 0]), -3.0);
        assert_eq!(p.terms().count(), 2);
    }

    #[test]
    fn derivative_and_antiderivative_invert() {
        let p = norm_sq::<f64>(1).pow(2).add(&RealPoly::var(1));
        let q = p.antiderivative(0).derivative(0);
        assert_eq!(p, q);
    }

    #[test]
    fn linear_substitution_swaps() {
        let p = RealPoly::<f64>::var(0).mul(&RealPoly::var(0)).add(&RealPoly::var(1));
        let mut m = [[0.0; 4]; 4];
        m[0][1] = 1.0;
        m[1][0] = 1.0;
        let q = p.linear_substitution(&m);
        assert_eq!(q.eval(&[2.0, 3.0, 0.0, 0.0]), 9.0 + 2.0);
    }
}
