//! Strictly plurisubharmonic weights given as closed-form term lists.
//!
//! Every potential is compiled to a [`RealPoly`] in `(x1, y1, x2, y2)`, so
//! values and derivatives are exact; grids only enter when sampling.

mod chart;
mod glue;
mod regmax;

pub use chart::{normalize_chart, NormalizedChart};
pub use glue::{glue_to_ball, suggest_gluing_parameters, GluedPotential};
pub use regmax::{bump_profile, regularized_max, regularized_max_bound, BumpProfile};

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{complex_hessian_at, GridSpec, ScalarField};
use crate::poly::{norm_sq, ComplexPoly, RealPoly, MAX_VARS};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// A function of `|z|^2` alone.
    Radial,
    /// A function of `(|z1|^2, |z2|^2)`.
    Reinhardt,
    General,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::Radial => "radial",
            Symmetry::Reinhardt => "reinhardt",
            Symmetry::General => "general",
        })
    }
}

/// One summand of a potential. Indices of complex coordinates are 0-based
/// here and 1-based in the text format.
#[derive(Clone, Debug, PartialEq)]
pub enum Term<T: Real> {
    /// `c`
    Constant(T),
    /// `c |z|^{2k}`, `k >= 1`
    Radial { coeff: T, k: u32 },
    /// `c Re(z^m)`
    HoloRe { coeff: T, exps: Vec<u32> },
    /// `c Im(z^m)`
    HoloIm { coeff: T, exps: Vec<u32> },
    /// `c |z1|^2 |z2|^{2j}`
    Mixed { coeff: T, j: u32 },
    /// `c Re(z^m) |z|^{2k}`
    Perturbation { coeff: T, k: u32, exps: Vec<u32> },
    /// `c Re(z_i conj(z_j))`
    Hermitian { coeff: T, i: usize, j: usize },
    /// `c Im(z_i conj(z_j))`
    HermitianIm { coeff: T, i: usize, j: usize },
    /// `c x1^a y1^b x2^c y2^d`
    Monomial { coeff: T, exps: [u8; MAX_VARS] },
}

impl<T: Real> Term<T> {
    fn to_poly(&self, dim: usize) -> RealPoly<T> {
        let zz = |i: usize, j: usize| ComplexPoly::coordinate(i).mul(&ComplexPoly::coordinate(j).conj());
        match self {
            Term::Constant(c) => RealPoly::constant(*c),
            Term::Radial { coeff, k } => norm_sq(dim).pow(*k).scale(*coeff),
            Term::HoloRe { coeff, exps } => ComplexPoly::monomial(exps).re.scale(*coeff),
            Term::HoloIm { coeff, exps } => ComplexPoly::monomial(exps).im.scale(*coeff),
            Term::Mixed { coeff, j } => norm_sq::<T>(1)
                .mul(&zz(1, 1).re.pow(*j))
                .scale(*coeff),
            Term::Perturbation { coeff, k, exps } => ComplexPoly::monomial(exps)
                .re
                .mul(&norm_sq(dim).pow(*k))
                .scale(*coeff),
            Term::Hermitian { coeff, i, j } => zz(*i, *j).re.scale(*coeff),
            Term::HermitianIm { coeff, i, j } => zz(*i, *j).im.scale(*coeff),
            Term::Monomial { coeff, exps } => RealPoly::monomial(*coeff, *exps),
        }
    }

    /// Highest complex coordinate index referenced, plus one.
    fn arity(&self) -> usize {
        match self {
            Term::Constant(_) | Term::Radial { .. } => 1,
            Term::HoloRe { exps, .. } | Term::HoloIm { exps, .. } | Term::Perturbation { exps, .. } => {
                exps.len().max(1)
            }
            Term::Mixed { .. } => 2,
            Term::Hermitian { i, j, .. } | Term::HermitianIm { i, j, .. } => i.max(j) + 1,
            Term::Monomial { exps, .. } => {
                if exps[2] > 0 || exps[3] > 0 {
                    2
                } else {
                    1
                }
            }
        }
    }

    fn symmetry(&self, dim: usize) -> Symmetry {
        match self {
            Term::Constant(_) | Term::Radial { .. } => Symmetry::Radial,
            Term::Hermitian { i, j, .. } if i == j => {
                if dim == 1 {
                    Symmetry::Radial
                } else {
                    Symmetry::Reinhardt
                }
            }
            Term::Mixed { .. } => Symmetry::Reinhardt,
            _ => Symmetry::General,
        }
    }

    fn to_line(&self) -> String {
        let list = |e: &[u32]| e.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
        let num = |c: &T| c.to_f64_lossy();
        match self {
            Term::Constant(c) => format!("const {}", num(c)),
            Term::Radial { coeff, k } => format!("abs {} {k}", num(coeff)),
            Term::HoloRe { coeff, exps } => format!("re {} {}", num(coeff), list(exps)),
            Term::HoloIm { coeff, exps } => format!("im {} {}", num(coeff), list(exps)),
            Term::Mixed { coeff, j } => format!("mixed {} {j}", num(coeff)),
            Term::Perturbation { coeff, k, exps } => {
                format!("pert {} {k} {}", num(coeff), list(exps))
            }
            Term::Hermitian { coeff, i, j } => format!("herm {} {} {}", num(coeff), i + 1, j + 1),
            Term::HermitianIm { coeff, i, j } => {
                format!("iherm {} {} {}", num(coeff), i + 1, j + 1)
            }
            Term::Monomial { coeff, exps } => format!(
                "mono {} {}",
                num(coeff),
                exps.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ")
            ),
        }
    }
}

/// `|z1|^{2i} |z2|^{2j}` coefficients of a Reinhardt (or radial) potential.
#[derive(Clone, Debug, PartialEq)]
pub struct ReinhardtProfile<T: Real> {
    dim: usize,
    coeffs: BTreeMap<(u32, u32), T>,
}

impl<T: Real> ReinhardtProfile<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `chi(t) = phi` at `|z_j|^2 = e^{t_j}`.
    pub fn value(&self, t: &[T]) -> T {
        self.coeffs
            .iter()
            .map(|(&(i, j), &c)| c * self.exp_term(t, i, j))
            .sum()
    }

    /// `∂chi/∂t_axis`.
    pub fn slope(&self, t: &[T], axis: usize) -> T {
        self.coeffs
            .iter()
            .map(|(&(i, j), &c)| {
                let k = if axis == 0 { i } else { j };
                c * T::from_usize_lossy(k as usize) * self.exp_term(t, i, j)
            })
            .sum()
    }

    /// `∂²chi/∂t_axis²`.
    pub fn curvature(&self, t: &[T], axis: usize) -> T {
        self.coeffs
            .iter()
            .map(|(&(i, j), &c)| {
                let k = T::from_usize_lossy(if axis == 0 { i } else { j } as usize);
                c * k * k * self.exp_term(t, i, j)
            })
            .sum()
    }

    fn exp_term(&self, t: &[T], i: u32, j: u32) -> T {
        let mut e = T::from_usize_lossy(i as usize) * t[0];
        if j > 0 {
            e += T::from_usize_lossy(j as usize) * t[1];
        }
        if i == 0 && j == 0 {
            T::one()
        } else {
            e.exp()
        }
    }

    /// For one-variable profiles: `q(s)` with `s = |z|^2`.
    pub fn in_s(&self, s: T) -> T {
        self.coeffs
            .iter()
            .map(|(&(i, _), &c)| c * s.powi(i as i32))
            .sum()
    }

    /// `s q'(s)`, the `dd^c`-mass enclosed by `{|z|^2 <= s}` for radial profiles.
    pub fn enclosed_mass(&self, s: T) -> T {
        self.coeffs
            .iter()
            .map(|(&(i, _), &c)| c * T::from_usize_lossy(i as usize) * s.powi(i as i32))
            .sum()
    }

    /// Derivative of [`Self::enclosed_mass`] with respect to `s`.
    pub fn enclosed_mass_ds(&self, s: T) -> T {
        self.coeffs
            .iter()
            .filter(|(&(i, _), _)| i > 0)
            .map(|(&(i, _), &c)| {
                let k = T::from_usize_lossy(i as usize);
                c * k * k * s.powi(i as i32 - 1)
            })
            .sum()
    }
}

/// Certificate returned by [`validate_strict_psh`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PshCertificate<T: Real> {
    pub min_eigenvalue: T,
    pub location: [T; 4],
}

impl<T: Real> PshCertificate<T> {
    pub fn is_valid(&self) -> bool {
        self.min_eigenvalue > T::zero()
    }
}

#[derive(Clone, Debug)]
pub struct Potential<T: Real> {
    dim: usize,
    terms: Vec<Term<T>>,
    symmetry: Symmetry,
    poly: RealPoly<T>,
    grad: Vec<RealPoly<T>>,
    hess: Vec<Vec<RealPoly<T>>>,
}

impl<T: Real> PartialEq for Potential<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.poly == other.poly
    }
}

impl<T: Real> Potential<T> {
    /// Builds a potential in `C^dim` from its terms.
    pub fn new(dim: usize, terms: Vec<Term<T>>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Unsupported(format!("dimension {dim}")));
        }
        if let Some(t) = terms.iter().find(|t| t.arity() > dim) {
            return Err(Error::Unsupported(format!(
                "term {:?} needs more than {dim} complex coordinates",
                t.to_line()
            )));
        }
        if terms.iter().any(|t| matches!(t, Term::Radial { k: 0, .. })) {
            return Err(Error::Unsupported("abs terms need k >= 1".into()));
        }
        let poly = terms
            .iter()
            .fold(RealPoly::zero(), |acc, t| acc.add(&t.to_poly(dim)));
        let symmetry = terms.iter().fold(Symmetry::Radial, |acc, t| {
            match (acc, t.symmetry(dim)) {
                (Symmetry::General, _) | (_, Symmetry::General) => Symmetry::General,
                (Symmetry::Reinhardt, _) | (_, Symmetry::Reinhardt) => Symmetry::Reinhardt,
                _ => Symmetry::Radial,
            }
        });
        Ok(Self::assemble(dim, terms, symmetry, poly))
    }

    /// Wraps an arbitrary real polynomial as a general potential.
    pub fn from_poly(dim: usize, poly: RealPoly<T>) -> Self {
        let terms = poly
            .terms()
            .map(|(e, &c)| Term::Monomial { coeff: c, exps: *e })
            .collect();
        Self::assemble(dim, terms, Symmetry::General, poly)
    }

    fn assemble(dim: usize, terms: Vec<Term<T>>, symmetry: Symmetry, poly: RealPoly<T>) -> Self {
        let vars = 2 * dim;
        let grad: Vec<_> = (0..vars).map(|v| poly.derivative(v)).collect();
        let hess = (0..vars)
            .map(|a| (0..vars).map(|b| grad[a].derivative(b)).collect())
            .collect();
        Self {
            dim,
            terms,
            symmetry,
            poly,
            grad,
            hess,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn poly(&self) -> &RealPoly<T> {
        &self.poly
    }

    pub fn value(&self, x: &[T; 4]) -> T {
        self.poly.eval(x)
    }

    pub fn gradient(&self, x: &[T; 4]) -> [T; 4] {
        let mut g = [T::zero(); 4];
        for (slot, p) in g.iter_mut().zip(&self.grad) {
            *slot = p.eval(x);
        }
        g
    }

    /// Real second partial `∂²φ/∂x_a∂x_b`.
    pub fn second(&self, x: &[T; 4], a: usize, b: usize) -> T {
        self.hess[a][b].eval(x)
    }

    /// `∂²φ/∂z_j∂z̄_k`.
    pub fn complex_hessian(&self, x: &[T; 4], j: usize, k: usize) -> Complex<T> {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        let q = T::lit(0.25);
        Complex::new(
            q * (self.second(x, xj, xk) + self.second(x, yj, yk)),
            q * (self.second(x, xj, yk) - self.second(x, yj, xk)),
        )
    }

    /// Smallest eigenvalue of the complex Hessian at `x`.
    pub fn min_eigenvalue(&self, x: &[T; 4]) -> T {
        if self.dim == 1 {
            return self.complex_hessian(x, 0, 0).re;
        }
        let a = self.complex_hessian(x, 0, 0).re;
        let d = self.complex_hessian(x, 1, 1).re;
        let b = self.complex_hessian(x, 0, 1);
        hermitian2_min_eig(a, d, b)
    }

    /// `n = 1` density of `dd^c φ` against Lebesgue measure.
    pub fn density(&self, x: &[T; 4]) -> T {
        self.complex_hessian(x, 0, 0).re / T::PI()
    }

    /// The density as a polynomial, `Δφ / 4π` (`n = 1`).
    pub fn density_poly(&self) -> RealPoly<T> {
        self.hess[0][0]
            .add(&self.hess[1][1])
            .scale(T::one() / (T::lit(4.0) * T::PI()))
    }

    /// Samples `φ` on the domain nodes of `grid`.
    pub fn sample(&self, grid: &GridSpec<T>) -> Result<ScalarField<T>> {
        self.check_grid(grid)?;
        ScalarField::from_fn(*grid, |c| self.value(c))
    }

    fn check_grid(&self, grid: &GridSpec<T>) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch(format!(
                "potential in C^{} sampled on a C^{} grid",
                self.dim,
                grid.dim()
            )));
        }
        Ok(())
    }

    /// Profile in `t_j = ln|z_j|^2` when the symmetry tag allows it.
    pub fn reinhardt_profile(&self) -> Option<ReinhardtProfile<T>> {
        if self.symmetry == Symmetry::General {
            return None;
        }
        let mut coeffs: BTreeMap<(u32, u32), T> = BTreeMap::new();
        let mut add = |key: (u32, u32), c: T| *coeffs.entry(key).or_insert(T::zero()) += c;
        for t in &self.terms {
            match t {
                Term::Constant(c) => add((0, 0), *c),
                Term::Radial { coeff, k } => {
                    if self.dim == 1 {
                        add((*k, 0), *coeff);
                    } else {
                        // (s1 + s2)^k expanded binomially
                        let mut binom = T::one();
                        for i in 0..=*k {
                            add((i, *k - i), *coeff * binom);
                            binom = binom * T::from_usize_lossy((*k - i) as usize)
                                / T::from_usize_lossy((i + 1) as usize);
                        }
                    }
                }
                Term::Hermitian { coeff, i, j } if i == j => {
                    if *i == 0 {
                        add((1, 0), *coeff)
                    } else {
                        add((0, 1), *coeff)
                    }
                }
                Term::Mixed { coeff, j } => add((1, *j), *coeff),
                _ => return None,
            }
        }
        Some(ReinhardtProfile {
            dim: self.dim,
            coeffs,
        })
    }

    /// Serializes to the `kind coeff exponents...` line format.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\n", self.dim);
        for t in &self.terms {
            out.push_str(&t.to_line());
            out.push('\n');
        }
        out
    }

    /// Parses the line format; `first_line` offsets reported line numbers.
    pub fn parse_terms(text: &str, first_line: usize) -> Result<Self> {
        let mut dim = None;
        let mut terms = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ln = first_line + k;
            let err = |msg: String| Error::Parse { line: ln, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks[0] == "dim" {
                let d = toks
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("dim needs an integer".into()))?;
                dim = Some(d);
                continue;
            }
            terms.push(parse_term(&toks).map_err(err)?);
        }
        let inferred = terms.iter().map(Term::arity).max().unwrap_or(1);
        let dim = dim.unwrap_or(inferred);
        Self::new(dim, terms).map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::Parse {
                line: first_line,
                msg: other.to_string(),
            },
        })
    }
}

fn parse_term<T: Real>(toks: &[&str]) -> std::result::Result<Term<T>, String> {
    let kind = toks[0];
    let coeff: f64 = toks
        .get(1)
        .ok_or_else(|| format!("{kind} needs a coefficient"))?
        .parse()
        .map_err(|_| format!("bad coefficient {:?}", toks[1]))?;
    let coeff = T::lit(coeff);
    let ints = |from: usize| -> std::result::Result<Vec<u32>, String> {
        toks[from..]
            .iter()
            .map(|s| s.parse::<u32>().map_err(|_| format!("bad integer {s:?}")))
            .collect()
    };
    let exactly = |v: Vec<u32>, n: usize| -> std::result::Result<Vec<u32>, String> {
        if v.len() == n {
            Ok(v)
        } else {
            Err(format!("{kind} expects {n} integer(s), got {}", v.len()))
        }
    };
    let some = |v: Vec<u32>| -> std::result::Result<Vec<u32>, String> {
        if (1..=2).contains(&v.len()) {
            Ok(v)
        } else {
            Err(format!("{kind} expects 1 or 2 exponents"))
        }
    };
    let index = |v: u32| -> std::result::Result<usize, String> {
        if (1..=2).contains(&v) {
            Ok(v as usize - 1)
        } else {
            Err(format!("coordinate index {v} out of range"))
        }
    };
    Ok(match kind {
        "const" => {
            exactly(ints(2)?, 0)?;
            Term::Constant(coeff)
        }
        "abs" => Term::Radial {
            coeff,
            k: exactly(ints(2)?, 1)?[0],
        },
        "re" => Term::HoloRe {
            coeff,
            exps: some(ints(2)?)?,
        },
        "im" => Term::HoloIm {
            coeff,
            exps: some(ints(2)?)?,
        },
        "mixed" => Term::Mixed {
            coeff,
            j: exactly(ints(2)?, 1)?[0],
        },
        "pert" => {
            let v = ints(2)?;
            if v.len() < 2 {
                return Err("pert expects k and exponents".into());
            }
            Term::Perturbation {
                coeff,
                k: v[0],
                exps: some(v[1..].to_vec())?,
            }
        }
        "herm" | "iherm" => {
            let v = exactly(ints(2)?, 2)?;
            let (i, j) = (index(v[0])?, index(v[1])?);
            if kind == "herm" {
                Term::Hermitian { coeff, i, j }
            } else {
                Term::HermitianIm { coeff, i, j }
            }
        }
        "mono" => {
            let v = ints(2)?;
            if v.len() != 2 && v.len() != 4 {
                return Err("mono expects 2 or 4 exponents".into());
            }
            let mut exps = [0u8; MAX_VARS];
            for (slot, &e) in exps.iter_mut().zip(&v) {
                *slot = u8::try_from(e).map_err(|_| "exponent too large".to_string())?;
            }
            Term::Monomial { coeff, exps }
        }
        other => return Err(format!("unknown term kind {other:?}")),
    })
}

pub(crate) fn hermitian2_min_eig<T: Real>(a: T, d: T, b: Complex<T>) -> T {
    let half = T::lit(0.5);
    let m = half * (a + d);
    let r = (half * (a - d)).hypot(b.norm());
    m - r
}

/// Minimum over masked-in nodes of the smallest complex-Hessian eigenvalue.
pub fn validate_strict_psh<T: Real>(p: &Potential<T>, grid: &GridSpec<T>) -> Result<PshCertificate<T>> {
    p.check_grid(grid)?;
    let mut best = PshCertificate {
        min_eigenvalue: T::infinity(),
        location: [T::zero(); 4],
    };
    for idx in 0..grid.len() {
        if !grid.in_domain(idx) {
            continue;
        }
        let x = grid.coords(idx);
        if !p.value(&x).is_finite() {
            return Err(Error::NonFinite { node: idx });
        }
        let e = p.min_eigenvalue(&x);
        if !e.is_finite() {
            return Err(Error::NonFinite { node: idx });
        }
        if e < best.min_eigenvalue {
            best = PshCertificate {
                min_eigenvalue: e,
                location: x,
            };
        }
    }
    Ok(best)
}

/// Finite-difference version of [`validate_strict_psh`] for sampled fields,
/// evaluated on the field's interior.
pub fn validate_strict_psh_field<T: Real>(f: &ScalarField<T>) -> Result<PshCertificate<T>> {
    let g = *f.grid();
    let interior = f.interior();
    let mut best = PshCertificate {
        min_eigenvalue: T::infinity(),
        location: [T::zero(); 4],
    };
    for idx in 0..g.len() {
        if !interior[idx] {
            continue;
        }
        let e = if g.dim() == 1 {
            complex_hessian_at(f, idx, 0, 0).0
        } else {
            let a = complex_hessian_at(f, idx, 0, 0).0;
            let d = complex_hessian_at(f, idx, 1, 1).0;
            let (br, bi) = complex_hessian_at(f, idx, 0, 1);
            hermitian2_min_eig(a, d, Complex::new(br, bi))
        };
        if !e.is_finite() {
            return Err(Error::NonFinite { node: idx });
        }
        if e < best.min_eigenvalue {
            best = PshCertificate {
                min_eigenvalue: e,
                location: g.coords(idx),
            };
        }
    }
    Ok(best)
}

/// Builtin test corpus: `flat`, `quartic`, `perturbed`, `reinhardt2`.
pub fn builtin<T: Real>(name: &str) -> Option<Potential<T>> {
    let one = T::one();
    let (dim, terms) = match name {
        "flat" => (1, vec![Term::Radial { coeff: one, k: 1 }]),
        "quartic" => (
            1,
            vec![
                Term::Radial { coeff: one, k: 1 },
                Term::Radial {
                    coeff: T::lit(0.5),
                    k: 2,
                },
            ],
        ),
        "perturbed" => (
            1,
            vec![
                Term::Radial { coeff: one, k: 1 },
                Term::HoloRe {
                    coeff: T::lit(0.3),
                    exps: vec![3],
                },
            ],
        ),
        "reinhardt2" => (
            2,
            vec![
                Term::Radial { coeff: one, k: 1 },
                Term::Mixed { coeff: one, j: 1 },
            ],
        ),
        _ => return None,
    };
    Potential::new(dim, terms).ok()
}

pub const BUILTIN_NAMES: [&str; 4] = ["flat", "quartic", "perturbed", "reinhardt2"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, CoordinateStyle};

    fn disc() -> GridSpec<f64> {
        build_grid(1, 64, 1.0, CoordinateStyle::Cartesian).unwrap()
    }

    #[test]
    fn builtins_have_expected_symmetry() {
        assert_eq!(builtin::<f64>("flat").unwrap().symmetry(), Symmetry::Radial);
        assert_eq!(builtin::<f64>("quartic").unwrap().symmetry(), Symmetry::Radial);
        assert_eq!(builtin::<f64>("perturbed").unwrap().symmetry(), Symmetry::General);
        assert_eq!(builtin::<f64>("reinhardt2").unwrap().symmetry(), Symmetry::Reinhardt);
        assert!(builtin::<f64>("nope").is_none());
    }

    #[test]
    fn strict_psh_examples() {
        let flat = builtin::<f64>("flat").unwrap();
        let c = validate_strict_psh(&flat, &disc()).unwrap();
        assert_eq!(c.min_eigenvalue, 1.0);
        assert!(c.is_valid());

        let harmonic = Potential::new(1, vec![Term::HoloRe { coeff: 1.0, exps: vec![2] }]).unwrap();
        let c = validate_strict_psh(&harmonic, &disc()).unwrap();
        assert_eq!(c.min_eigenvalue, 0.0);
        assert!(!c.is_valid());

        let pert = builtin::<f64>("perturbed").unwrap();
        let c = validate_strict_psh(&pert, &disc()).unwrap();
        assert!((c.min_eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reinhardt2_is_strictly_psh_on_ball() {
        let p = builtin::<f64>("reinhardt2").unwrap();
        let g = build_grid(2, 16, 1.0, CoordinateStyle::Cartesian).unwrap();
        let c = validate_strict_psh(&p, &g).unwrap();
        assert!(c.is_valid());
        // Hessian at 0 is the identity
        assert!((p.min_eigenvalue(&[0.0; 4]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn field_certificate_matches_closed_form() {
        let p = builtin::<f64>("quartic").unwrap();
        let f = p.sample(&disc()).unwrap();
        let c = validate_strict_psh_field(&f).unwrap();
        // min of 1 + 2|z|^2 is at the origin
        assert!((c.min_eigenvalue - 1.0).abs() < 5e-3);
    }

    #[test]
    fn text_format_round_trips() {
        for name in BUILTIN_NAMES {
            let p = builtin::<f64>(name).unwrap();
            let q = Potential::<f64>::parse_terms(&p.to_text(), 1).unwrap();
            assert_eq!(p, q);
            assert_eq!(p.symmetry(), q.symmetry());
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Potential::<f64>::parse_terms("abs 1 1\nwobble 2 3\n", 10).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 11,
                msg: "unknown term kind \"wobble\"".into()
            }
        );
    }

    #[test]
    fn radial_profile_of_quartic() {
        let p = builtin::<f64>("quartic").unwrap();
        let prof = p.reinhardt_profile().unwrap();
        let s: f64 = 0.3;
        assert!((prof.in_s(s) - (s + s * s / 2.0)).abs() < 1e-15);
        assert!((prof.enclosed_mass(s) - (s + s * s)).abs() < 1e-15);
        assert!((prof.value(&[s.ln()]) - (s + s * s / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn reinhardt_profile_matches_polynomial() {
        let p = Potential::<f64>::new(
            2,
            vec![Term::Radial { coeff: 1.0, k: 2 }, Term::Mixed { coeff: 0.5, j: 2 }],
        )
        .unwrap();
        let prof = p.reinhardt_profile().unwrap();
        let x = [0.3, -0.1, 0.2, 0.25];
        let s1: f64 = x[0] * x[0] + x[1] * x[1];
        let s2: f64 = x[2] * x[2] + x[3] * x[3];
        assert!((prof.value(&[s1.ln(), s2.ln()]) - p.value(&x)).abs() < 1e-14);
    }
}
