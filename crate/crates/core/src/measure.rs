//! Monge-Ampère masses, boundary fluxes and holomorphic moments (`n = 1`
//! unless noted), all with `dd^c = (i/2π)∂∂̄`.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex;

use crate::envelope::EnvelopeResult;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::poly::{ComplexPoly, RealPoly};
use crate::polyline::Polyline;
use crate::potential::{Potential, Symmetry, Term};
use crate::quadrature::GaussRule;
use crate::scalar::{Compensated, Real};

/// Default number of holomorphic moments.
pub const DEFAULT_K_MAX: usize = 4;

/// A region of integration in the `z` plane.
#[derive(Clone, Debug)]
pub enum Region<T: Real> {
    /// Grid nodes, each standing for its `h x h` cell.
    Mask { grid: GridSpec<T>, mask: Vec<bool> },
    /// Interior of a closed polyline.
    Polygon(Polyline<T>),
    /// `{|z| <= r}`.
    Disc(T),
}

impl<T: Real> Region<T> {
    pub fn describe(&self) -> String {
        match self {
            Region::Mask { mask, .. } => {
                format!("mask({} nodes)", mask.iter().filter(|&&b| b).count())
            }
            Region::Polygon(p) => format!("polygon({} vertices)", p.len()),
            Region::Disc(r) => format!("disc(r={})", r.to_f64_lossy()),
        }
    }
}

/// Integral of a polynomial over the interior of a closed polyline, by
/// Green's theorem `∬ f = ∮ F dy` with `∂F/∂x = f`.
pub fn polygon_integral<T: Real>(f: &RealPoly<T>, poly: &Polyline<T>) -> Result<T> {
    if !poly.closed {
        return Err(Error::OpenPolyline);
    }
    let big_f = f.antiderivative(0);
    let rule = GaussRule::<T>::new(big_f.degree() / 2 + 1);
    let mut acc = Compensated::new();
    for (a, b) in poly.segments() {
        let dy = b[1] - a[1];
        if dy == T::zero() {
            continue;
        }
        let part = rule.integrate(T::zero(), T::one(), |s| {
            big_f.eval(&[a[0] + s * (b[0] - a[0]), a[1] + s * dy, T::zero(), T::zero()])
        });
        acc.add(part * dy);
    }
    Ok(acc.value())
}

/// Integral of a polynomial over `{|z| <= r}` in polar coordinates; the
/// angular rule is exact for the trigonometric degree involved.
pub fn disc_integral<T: Real>(f: &RealPoly<T>, r: T) -> T {
    let deg = f.degree();
    let radial = GaussRule::<T>::new(deg / 2 + 2);
    let n_theta = 2 * deg + 8;
    let mut acc = Compensated::new();
    for k in 0..n_theta {
        let th = T::lit(2.0) * T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(n_theta);
        let (s, c) = th.sin_cos();
        let line = radial.integrate(T::zero(), r, |rho| {
            f.eval(&[rho * c, rho * s, T::zero(), T::zero()]) * rho
        });
        acc.add(line);
    }
    acc.value() * T::lit(2.0) * T::PI() / T::from_usize_lossy(n_theta)
}

fn require_dim<T: Real>(p: &Potential<T>, n: usize, what: &str) -> Result<()> {
    if p.dim() != n {
        return Err(Error::Unsupported(format!("{what} needs a potential in C^{n}")));
    }
    Ok(())
}

/// `dd^cφ`-mass of a region (`(dd^cφ)^n/n!` for radial potentials on discs).
pub fn ma_mass<T: Real>(p: &Potential<T>, region: &Region<T>) -> Result<T> {
    match region {
        Region::Disc(r) => {
            if p.symmetry() == Symmetry::Radial {
                return Ok(radial_ball_mass(p, *r * *r));
            }
            if p.dim() == 2 {
                return ball_mass(p, *r);
            }
            require_dim(p, 1, "ma_mass")?;
            Ok(disc_integral(&p.density_poly(), *r))
        }
        Region::Polygon(poly) => {
            require_dim(p, 1, "ma_mass")?;
            polygon_integral(&p.density_poly(), poly)
        }
        Region::Mask { grid, mask } => {
            require_dim(p, 1, "ma_mass")?;
            if grid.dim() != 1 || mask.len() != grid.len() {
                return Err(Error::GridMismatch("mask does not fit the grid".into()));
            }
            let interior = grid.interior_of(&grid.domain_mask());
            if mask.iter().zip(&interior).any(|(&m, &i)| m && !i) {
                return Err(Error::RegionTouchesBoundary);
            }
            let h2 = grid.spacing() * grid.spacing();
            let mut acc = Compensated::new();
            for (i, &m) in mask.iter().enumerate() {
                if m {
                    acc.add(p.density(&grid.coords(i)));
                }
            }
            Ok(acc.value() * h2)
        }
    }
}

/// `(s f'(s))^n / n!` for `φ = f(|z|^2)`: the `(dd^cφ)^n/n!`-mass of `{|z|^2 <= s}`.
fn radial_ball_mass<T: Real>(p: &Potential<T>, s: T) -> T {
    let mut sd = T::zero();
    for term in p.terms() {
        if let Term::Radial { coeff, k } = term {
            sd += *coeff * T::from_usize_lossy(*k as usize) * s.powi(*k as i32);
        }
    }
    match p.dim() {
        1 => sd,
        _ => sd * sd / T::lit(2.0),
    }
}

/// `(dd^cφ)^2/2`-mass of the ball of radius `r` for a Reinhardt potential in
/// `C^2`: the area of the gradient image of the ball in log coordinates.
pub fn ball_mass<T: Real>(p: &Potential<T>, r: T) -> Result<T> {
    let prof = p
        .reinhardt_profile()
        .ok_or_else(|| Error::NoSymmetry("ball mass needs a Reinhardt potential".into()))?;
    require_dim(p, 2, "ball_mass")?;
    let r2 = r * r;
    let grad = |s1: T| {
        let t = [s1.ln(), (r2 - s1).ln()];
        [prof.slope(&t, 0), prof.slope(&t, 1)]
    };
    // the image is bounded by both axes and the image of |z1|^2 + |z2|^2 = r^2
    // GL nodes stay well inside (0, r^2), so a centred difference is safe
    let rule = GaussRule::<T>::new(64);
    let eps = r2 * T::lit(1e-6);
    let area = rule.integrate(T::zero(), r2, |s1| {
        let g = grad(s1);
        let (hi, lo) = (grad(s1 + eps), grad(s1 - eps));
        let two_eps = eps + eps;
        g[0] * (hi[1] - lo[1]) / two_eps - g[1] * (hi[0] - lo[0]) / two_eps
    });
    Ok(area.abs() / T::lit(2.0))
}

/// Flux `∮ d^cφ = (1/4π)∮(φ_x dy - φ_y dx)` along a closed polyline.
pub fn boundary_mass<T: Real>(p: &Potential<T>, poly: &Polyline<T>) -> Result<T> {
    require_dim(p, 1, "boundary_mass")?;
    if !poly.closed {
        return Err(Error::OpenPolyline);
    }
    let fx = p.poly().derivative(0);
    let fy = p.poly().derivative(1);
    let rule = GaussRule::<T>::new(p.poly().degree() / 2 + 1);
    let mut acc = Compensated::new();
    for (a, b) in poly.segments() {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let part = rule.integrate(T::zero(), T::one(), |s| {
            let x = [a[0] + s * dx, a[1] + s * dy, T::zero(), T::zero()];
            fx.eval(&x) * dy - fy.eval(&x) * dx
        });
        acc.add(part);
    }
    Ok(acc.value() / (T::lit(4.0) * T::PI()))
}

/// Moments `M_k = ∫_{B_λ} z^k dV_φ`.
#[derive(Clone, Debug)]
pub struct MeasureReport<T: Real> {
    pub region: String,
    pub lambda: T,
    /// `M_0`, the `dV_φ`-volume.
    pub mass: T,
    pub lebesgue_area: T,
    pub moments: Vec<Complex<T>>,
    pub note: String,
}

impl<T: Real> MeasureReport<T> {
    /// `|M_k| / M_0`.
    pub fn ratio(&self, k: usize) -> T {
        self.moments[k].norm() / self.mass
    }

    pub fn max_ratio(&self) -> T {
        (1..self.moments.len())
            .map(|k| self.ratio(k))
            .fold(T::zero(), T::max)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let meta = format!(
            "region = {}\nlambda = {}\nmass = {:e}\nlebesgue_area = {:e}\nk_max = {}\nnote = {}\n",
            self.region,
            self.lambda.to_f64_lossy(),
            self.mass.to_f64_lossy(),
            self.lebesgue_area.to_f64_lossy(),
            self.moments.len() - 1,
            self.note
        );
        fs::write(dir.join("measure.txt"), meta)?;
        let mut f = fs::File::create(dir.join("moments.csv"))?;
        writeln!(f, "k,re,im")?;
        for (k, m) in self.moments.iter().enumerate() {
            writeln!(f, "{k},{:e},{:e}", m.re.to_f64_lossy(), m.im.to_f64_lossy())?;
        }
        Ok(())
    }

    /// Reads the moments table written by [`MeasureReport::write`].
    pub fn read_moments(dir: &Path) -> Result<Vec<Complex<T>>> {
        let text = fs::read_to_string(dir.join("moments.csv"))?;
        let mut out = Vec::new();
        for (ln, line) in text.lines().enumerate().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || Error::Parse {
                line: ln + 1,
                msg: format!("bad moment row {line:?}"),
            };
            if cols.len() != 3 {
                return Err(bad());
            }
            let re: f64 = cols[1].parse().map_err(|_| bad())?;
            let im: f64 = cols[2].parse().map_err(|_| bad())?;
            out.push(Complex::new(T::lit(re), T::lit(im)));
        }
        Ok(out)
    }
}

/// Moments of `dV_φ` over `B_λ`; exact circles are used for radial results.
pub fn reproducing_check<T: Real>(
    p: &Potential<T>,
    e: &EnvelopeResult<T>,
    k_max: usize,
) -> Result<MeasureReport<T>> {
    require_dim(p, 1, "reproducing_check")?;
    let density = p.density_poly();
    let one = RealPoly::constant(T::one());
    let region = match e.radial_profile() {
        Some(rp) if rp.t_star().is_finite() => Region::Disc(rp.boundary_norm_sq().sqrt()),
        _ => {
            if e.boundary.is_empty() {
                return Err(Error::EmptyRegion(format!(
                    "B_lambda is empty at lambda = {}",
                    e.lambda
                )));
            }
            Region::Polygon(e.boundary.clone())
        }
    };
    let integrate = |f: &RealPoly<T>| -> Result<T> {
        match &region {
            Region::Disc(r) => Ok(disc_integral(f, *r)),
            Region::Polygon(poly) => polygon_integral(f, poly),
            Region::Mask { .. } => unreachable!("masks are not used for moments"),
        }
    };
    let mut moments = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let zk = ComplexPoly::monomial(&[k as u32]);
        let re = integrate(&zk.re.mul(&density))?;
        let im = integrate(&zk.im.mul(&density))?;
        moments.push(Complex::new(re, im));
    }
    Ok(MeasureReport {
        region: region.describe(),
        lambda: e.lambda,
        mass: moments[0].re,
        lebesgue_area: integrate(&one)?,
        moments,
        note: "dd^c = (i/2pi) d dbar; M_k integrates z^k against dd^c phi".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{builtin, Term};

    #[test]
    fn flat_disc_mass_is_r_squared() {
        let p = builtin::<f64>("flat").unwrap();
        assert!((ma_mass(&p, &Region::Disc(0.5)).unwrap() - 0.25).abs() < 1e-15);
        let poly = Polyline::circle(0.5, 4096);
        let exact_polygon_area = poly.signed_area();
        let m = ma_mass(&p, &Region::Polygon(poly)).unwrap();
        assert!((m - exact_polygon_area / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn quartic_disc_mass() {
        let p = builtin::<f64>("quartic").unwrap();
        let r: f64 = 0.6;
        let m = ma_mass(&p, &Region::Disc(r)).unwrap();
        assert!((m - (r * r + r.powi(4))).abs() < 1e-15);
    }

    #[test]
    fn ball_mass_in_c2() {
        let p = Potential::<f64>::new(2, vec![Term::Radial { coeff: 1.0, k: 1 }]).unwrap();
        // vol of the ball of radius r is pi^2 r^4 / 2 and (dd^c|z|^2)^2/2 = dV / pi^2
        assert!((ma_mass(&p, &Region::Disc(0.5)).unwrap() - 0.5f64.powi(4) / 2.0).abs() < 1e-16);
    }

    #[test]
    fn reinhardt_ball_mass() {
        let flat2 = Potential::<f64>::new(2, vec![Term::Radial { coeff: 1.0, k: 1 }]).unwrap();
        let direct = ball_mass(&flat2, 0.8).unwrap();
        assert!((direct - 0.8f64.powi(4) / 2.0).abs() < 1e-8);
        let p = builtin::<f64>("reinhardt2").unwrap();
        // p = (s1 + s1 s2, s2 + s1 s2) on s1 + s2 = 1: area from the shoelace of a fine polygon
        let n = 20000;
        let mut pts = vec![[0.0, 0.0]];
        for k in 0..=n {
            let s1 = k as f64 / n as f64;
            let s2 = 1.0 - s1;
            pts.push([s1 + s1 * s2, s2 + s1 * s2]);
        }
        let shoelace = Polyline::closed(pts).signed_area().abs();
        assert!((ball_mass(&p, 1.0).unwrap() - shoelace).abs() < 1e-6);
    }

    #[test]
    fn pluriharmonic_addend_changes_nothing() {
        let p = builtin::<f64>("flat").unwrap();
        let q = Potential::new(
            1,
            vec![Term::Radial { coeff: 1.0, k: 1 }, Term::HoloRe { coeff: 1.0, exps: vec![3] }],
        )
        .unwrap();
        let poly = Polyline::circle(0.7, 100);
        let a = ma_mass(&p, &Region::Polygon(poly.clone())).unwrap();
        let b = ma_mass(&q, &Region::Polygon(poly)).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn boundary_flux_of_circle() {
        let p = builtin::<f64>("flat").unwrap();
        let poly = Polyline::circle(0.5, 2000);
        let m = boundary_mass(&p, &poly).unwrap();
        // polygon inscribed in the circle: flux equals polygon area / pi
        assert!((m - poly.signed_area() / std::f64::consts::PI).abs() < 1e-14);
        assert!((m - 0.25).abs() < 1e-6);
        let point = Polyline::closed(vec![[0.1, 0.1]]);
        assert_eq!(boundary_mass(&p, &point).unwrap(), 0.0);
        let open = Polyline { points: vec![[0.0, 0.0], [0.1, 0.0]], closed: false };
        assert_eq!(boundary_mass(&p, &open), Err(Error::OpenPolyline));
    }

    #[test]
    fn disc_moments_vanish() {
        let p = builtin::<f64>("quartic").unwrap();
        let d = p.density_poly();
        for k in 1..5u32 {
            let zk = ComplexPoly::monomial(&[k]);
            assert!(disc_integral(&zk.re.mul(&d), 0.5).abs() < 1e-16);
            assert!(disc_integral(&zk.im.mul(&d), 0.5).abs() < 1e-16);
        }
    }
}
