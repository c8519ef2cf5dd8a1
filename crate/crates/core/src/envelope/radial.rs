use super::{finish, Backend, EnvelopeResult};
use crate::error::{Error, Result};
use crate::grid::{CoordinateStyle, GridSpec, ScalarField, LOG_RADIAL_T_MIN};
use crate::hull::lower_hull;
use crate::potential::{Potential, ReinhardtProfile, Symmetry};
use crate::scalar::Real;

/// Samples of `t = ln|z|^2` used for the hull.
const HULL_SAMPLES: usize = 4096;

/// Exact envelope of a radial obstacle `g(t) = q(e^t) - λ t` on `t <= t_max`:
/// constant `v_star` left of `t_star`, equal to `g` right of it except on
/// hull bridges.
#[derive(Clone, Debug)]
pub struct RadialProfile<T: Real> {
    profile: ReinhardtProfile<T>,
    lambda: T,
    t_star: T,
    v_star: T,
    t_max: T,
    bridges: Vec<(T, T)>,
}

impl<T: Real> RadialProfile<T> {
    pub fn new(profile: ReinhardtProfile<T>, lambda: T, radius: T) -> Result<Self> {
        if profile.dim() != 1 {
            return Err(Error::NoSymmetry("profile is not one-variable".into()));
        }
        if !(lambda >= T::zero()) {
            return Err(Error::Hypothesis(format!("lambda = {lambda} must be >= 0")));
        }
        let t_max = (radius * radius).ln();
        let t_lo = T::lit(LOG_RADIAL_T_MIN);
        let obstacle = |t: T| profile.in_s(t.exp()) - lambda * t;
        let n = HULL_SAMPLES;
        let ts: Vec<T> = (0..n)
            .map(|i| t_lo + (t_max - t_lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
            .collect();
        let gs: Vec<T> = ts.iter().map(|&t| obstacle(t)).collect();
        let hull = lower_hull(&ts, &gs);
        let (kpos, &kmin) = hull
            .iter()
            .enumerate()
            .min_by(|a, b| gs[*a.1].partial_cmp(&gs[*b.1]).unwrap())
            .expect("hull is non-empty");

        let (t_star, v_star) = if lambda == T::zero() && kmin == 0 {
            (T::neg_infinity(), profile.in_s(T::zero()))
        } else if kmin == n - 1 {
            (t_max, obstacle(t_max))
        } else {
            let left = if kpos > 0 { hull[kpos - 1] } else { kmin };
            let right = hull[kpos + 1];
            let convex_here = kmin - left <= 1 && right - kmin == 1;
            if convex_here && lambda > T::zero() {
                let s = solve_mass(&profile, lambda, ts[left].exp(), ts[right].exp());
                let t = s.ln();
                (t, obstacle(t))
            } else {
                (ts[kmin], gs[kmin])
            }
        };
        let bridges = hull
            .windows(2)
            .filter(|w| w[1] > w[0] + 1 && ts[w[0]] >= t_star)
            .map(|w| (ts[w[0]], ts[w[1]]))
            .collect();
        Ok(Self {
            profile,
            lambda,
            t_star,
            v_star,
            t_max,
            bridges,
        })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Where the envelope starts touching the obstacle; `-inf` when `λ = 0`.
    pub fn t_star(&self) -> T {
        self.t_star
    }

    /// `|z|^2` of the free boundary.
    pub fn boundary_norm_sq(&self) -> T {
        self.t_star.exp()
    }

    /// The constant value of `ψ_λ` on `B_λ`.
    pub fn flat_value(&self) -> T {
        self.v_star
    }

    pub fn obstacle(&self, t: T) -> T {
        self.profile.in_s(t.exp()) - self.lambda * t
    }

    /// True when `t` lies in the coincidence set.
    pub fn touches(&self, t: T) -> bool {
        t >= self.t_star && !self.bridges.iter().any(|&(a, b)| t > a && t < b)
    }

    /// `ψ_λ` as a function of `t = ln|z|^2`.
    pub fn value(&self, t: T) -> T {
        if t <= self.t_star {
            return self.v_star;
        }
        if let Some(&(a, b)) = self.bridges.iter().find(|&&(a, b)| t > a && t < b) {
            let (ga, gb) = (self.obstacle(a), self.obstacle(b));
            return ga + (gb - ga) * (t - a) / (b - a);
        }
        self.obstacle(t.min(self.t_max))
    }

    /// `ψ_λ(0)`.
    pub fn value_at_origin(&self) -> T {
        self.v_star
    }
}

/// Solves `s q'(s) = λ` for `s` in `[lo, hi]` by safeguarded Newton.
fn solve_mass<T: Real>(p: &ReinhardtProfile<T>, lambda: T, mut lo: T, mut hi: T) -> T {
    let f = |s: T| p.enclosed_mass(s) - lambda;
    if f(lo) > T::zero() {
        lo = T::zero();
    }
    while f(hi) < T::zero() {
        hi = hi * T::lit(2.0);
    }
    let mut s = T::lit(0.5) * (lo + hi);
    for _ in 0..200 {
        let fs = f(s);
        if fs == T::zero() {
            return s;
        }
        if fs < T::zero() {
            lo = s;
        } else {
            hi = s;
        }
        let d = p.enclosed_mass_ds(s);
        let newton = s - fs / d;
        let next = if d > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            T::lit(0.5) * (lo + hi)
        };
        if (next - s).abs() <= T::epsilon() * s {
            return next;
        }
        s = next;
    }
    s
}

/// Closed-form envelope for a radial potential in one variable, sampled on
/// `grid`. On the coincidence set the sampled envelope is the obstacle
/// value itself, so `a_λ` vanishes exactly there.
pub fn radial_envelope<T: Real>(
    p: &Potential<T>,
    lambda: T,
    grid: &GridSpec<T>,
) -> Result<EnvelopeResult<T>> {
    if p.symmetry() != Symmetry::Radial || p.dim() != 1 {
        return Err(Error::NoSymmetry(format!(
            "radial_envelope needs a radial potential in one variable, got {} in C^{}",
            p.symmetry(),
            p.dim()
        )));
    }
    if grid.dim() != 1 || grid.style() != CoordinateStyle::Cartesian {
        return Err(Error::GridMismatch("radial_envelope samples on an n = 1 Cartesian grid".into()));
    }
    let prof = p.reinhardt_profile().expect("radial potentials have a profile");
    let rp = RadialProfile::new(prof, lambda, grid.radius())?;
    let phi = p.sample(grid)?;
    let dom = phi.mask().to_vec();
    let pole_vals: Vec<T> = (0..grid.len())
        .map(|i| if dom[i] { grid.norm_sq(i).ln() } else { T::nan() })
        .collect();
    let pole = ScalarField::with_sentinels(*grid, pole_vals, dom.clone())?;
    let env_vals: Vec<T> = (0..grid.len())
        .map(|i| {
            if !dom[i] {
                return T::nan();
            }
            let t = pole.value(i);
            if t == T::neg_infinity() {
                return if lambda > T::zero() { rp.value_at_origin() } else { phi.value(i) };
            }
            if rp.touches(t) {
                phi.value(i) - lambda * t
            } else {
                rp.value(t)
            }
        })
        .collect();
    let envelope = ScalarField::new(*grid, env_vals, dom)?;
    finish(
        lambda,
        Backend::Radial,
        T::zero(),
        T::lit(1e-12),
        phi,
        pole,
        envelope,
        (0, T::zero()),
        Some(rp),
    )
}
