use super::regmax::{bump_profile, BumpProfile};
use super::NormalizedChart;
use crate::error::{Error, Result};
use crate::grid::{c2_norm, CoordinateStyle, GridSpec, ScalarField};
use crate::scalar::Real;

/// Angular samples per unit of `|z|` used to check that the transition closes before `σ`.
const RING_SAMPLES: usize = 256;

/// A normalized potential glued to `|z|^2` outside a small ball.
#[derive(Clone, Debug)]
pub struct GluedPotential<T: Real> {
    chart: NormalizedChart<T>,
    profile: BumpProfile<T>,
    pub a: T,
    pub b: T,
    /// `ω = scale · dd^c φ̃` near 0.
    pub scale: T,
    pub sigma: T,
    /// Samples of `φ̃` on the requested grid.
    pub field: ScalarField<T>,
    /// `|φ̃ - |z|^2|_{C²}` measured on the grid.
    pub achieved: T,
}

impl<T: Real> GluedPotential<T> {
    pub fn chart(&self) -> &NormalizedChart<T> {
        &self.chart
    }

    /// Closed-form `φ̃` at `x`.
    pub fn value(&self, x: &[T; 4]) -> T {
        glued_value(&self.chart, &self.profile, self.a, self.b, self.sigma, x)
    }

    /// Width of the annulus in `|z|` where neither branch holds, for the flat model.
    pub fn transition_radii(&self) -> (T, T) {
        let r = self.b / self.a;
        (r.sqrt(), (T::lit(3.0) * r).sqrt())
    }
}

fn norm_sq<T: Real>(x: &[T; 4]) -> T {
    x.iter().fold(T::zero(), |acc, &v| acc + v * v)
}

fn glued_value<T: Real>(
    nc: &NormalizedChart<T>,
    profile: &BumpProfile<T>,
    a: T,
    b: T,
    sigma: T,
    x: &[T; 4],
) -> T {
    let s = norm_sq(x);
    if s >= sigma * sigma {
        return s;
    }
    let one = T::one();
    let two = T::lit(2.0);
    let alpha = nc.phi.value(x);
    let beta = (one + a) * s - two * b;
    if alpha - beta <= -profile.width() {
        return s;
    }
    (profile.value(alpha, beta) + two * b) / (one + a)
}

/// Checks `α - β <= -b` on a ring of points at `|z| = σ`.
fn transition_closes<T: Real>(nc: &NormalizedChart<T>, a: T, b: T, sigma: T) -> bool {
    let one = T::one();
    let two = T::lit(2.0);
    let check = |x: [T; 4]| {
        let beta = (one + a) * norm_sq(&x) - two * b;
        nc.phi.value(&x) - beta <= -b
    };
    for k in 0..RING_SAMPLES {
        let th = T::lit(2.0) * T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(RING_SAMPLES);
        let (sn, cs) = th.sin_cos();
        if nc.dim() == 1 {
            if !check([sigma * cs, sigma * sn, T::zero(), T::zero()]) {
                return false;
            }
        } else {
            // torus slices of the sphere at a few splits of |z1|:|z2|
            for m in 0..=8 {
                let mix = T::from_usize_lossy(m) / T::lit(8.0) * T::FRAC_PI_2();
                let (r2, r1) = (sigma * mix.sin(), sigma * mix.cos());
                for l in 0..8 {
                    let ph = T::lit(2.0) * T::PI() * T::from_usize_lossy(l) / T::lit(8.0);
                    let (s2, c2) = (th + ph).sin_cos();
                    if !check([r1 * cs, r1 * sn, r2 * c2, r2 * s2]) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Glues the normalized potential of `nc` to `|z|^2` outside `B_σ`,
/// `σ = 3 sqrt(b/a)`, and samples the result on `grid`.
pub fn glue_to_ball<T: Real>(
    nc: &NormalizedChart<T>,
    a: T,
    b: T,
    grid: &GridSpec<T>,
    chart_radius: T,
    target: Option<T>,
) -> Result<GluedPotential<T>> {
    if !(a > T::zero() && b > T::zero()) {
        return Err(Error::Hypothesis(format!("need a > 0 and b > 0, got a = {a}, b = {b}")));
    }
    if grid.dim() != nc.dim() || grid.style() != CoordinateStyle::Cartesian {
        return Err(Error::GridMismatch(
            "gluing needs a Cartesian grid in the chart dimension".into(),
        ));
    }
    let sigma = T::lit(3.0) * (b / a).sqrt();
    if sigma >= chart_radius {
        return Err(Error::GluingRadius {
            sigma: sigma.to_f64_lossy(),
            delta: chart_radius.to_f64_lossy(),
        });
    }
    if !transition_closes(nc, a, b, sigma) {
        return Err(Error::Hypothesis(format!(
            "the cubic remainder of φ keeps the transition open at |z| = {sigma}; shrink b"
        )));
    }
    let profile = bump_profile(b)?;
    let field = ScalarField::from_fn(*grid, |x| glued_value(nc, &profile, a, b, sigma, x))?;
    let flat = ScalarField::from_fn(*grid, norm_sq)?;
    let achieved = c2_norm(&field, &flat)?;
    if let Some(eps) = target {
        if achieved >= eps {
            return Err(Error::GluingTolerance {
                achieved: achieved.to_f64_lossy(),
                requested: eps.to_f64_lossy(),
            });
        }
    }
    Ok(GluedPotential {
        chart: nc.clone(),
        profile,
        a,
        b,
        scale: T::one() + a,
        sigma,
        field,
        achieved,
    })
}

/// Picks `(a, b)` for a target C² distance: `38a` below `ε/2`, and `b`
/// shrunk until `σ < δ/2` and the transition closes before `σ`.
pub fn suggest_gluing_parameters<T: Real>(
    nc: &NormalizedChart<T>,
    target: T,
    chart_radius: T,
) -> Result<(T, T)> {
    let a = target / T::lit(90.0);
    let mut b = a * (chart_radius / T::lit(6.0)).powi(2);
    for _ in 0..60 {
        let sigma = T::lit(3.0) * (b / a).sqrt();
        if sigma < chart_radius && transition_closes(nc, a, b, sigma) {
            return Ok((a, b));
        }
        b = b / T::lit(4.0);
    }
    Err(Error::Hypothesis("no admissible b found".into()))
}
