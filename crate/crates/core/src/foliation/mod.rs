//! Leaves of the Monge-Ampère foliation for `n = 1`, their disc areas and
//! the tubular map from the central fiber.
//!
//! On level `λ` the leaf through `x` follows the gradient of the crossing
//! time `T_λ = G_λ - ln|x|^2`, `G_λ = -∂_λψ_λ`, so that `T_λ(x(t)) = t`.
//! Points are carried in the chart coordinate `z = x e^{t/2}`.

mod fit;
mod io;
mod smooth;
mod tube;

pub use io::{read_leaf_csv, read_tubular_csv, write_leaf_csv, write_tubular_csv};
pub use smooth::RaySmoother;
pub use tube::{build_tubular_map, check_pullback, tubular_map_on_levels, PullbackReport, TubeEntry, TubularMap};

use fit::{fit_harmonic, near, HarmonicQuad};

use crate::envelope::{grid_envelope_with_kernel, radial_envelope, Backend, EnvelopeResult, LogKernel};
use crate::error::{Error, Result};
use crate::geodesic::GeodesicRay;
use crate::grid::{CoordinateStyle, GridSpec};
use crate::measure::boundary_mass;
use crate::polyline::{level_loop, Crossing, Polyline};
use crate::potential::Potential;
use crate::scalar::Real;

/// Width in nodes of the band along the free boundary left out of the fits of `G_λ`.
pub(crate) const FIT_BAND: usize = 1;

/// Settings for leaf tracing.
#[derive(Clone, Debug)]
pub struct FoliationOptions<T: Real> {
    pub backend: Backend,
    /// Half-width of the λ-difference giving `G_λ`.
    pub delta: T,
    /// RK4 steps over `[0, T_max]`.
    pub steps: usize,
    pub tol: T,
    pub max_iters: usize,
    /// Leaf samples between two Hamiltonian evaluations.
    pub drift_stride: usize,
}

impl<T: Real> FoliationOptions<T> {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            delta: T::lit(5e-3),
            steps: 2048,
            tol: T::lit(1e-12),
            max_iters: 200_000,
            drift_stride: 4,
        }
    }
}

fn solve<T: Real>(
    p: &Potential<T>,
    lambda: T,
    grid: &GridSpec<T>,
    kernel: Option<&LogKernel<T>>,
    opts: &FoliationOptions<T>,
) -> Result<EnvelopeResult<T>> {
    match (opts.backend, kernel) {
        (Backend::Grid, Some(k)) => grid_envelope_with_kernel(p, lambda, k, opts.tol, opts.max_iters),
        (Backend::Radial, _) => radial_envelope(p, lambda, grid),
        (b, _) => Err(Error::Unsupported(format!("leaf tracing with the {b} backend"))),
    }
}

/// Green function `G_λ` of one level, from envelopes at `λ ± δ`.
#[derive(Clone, Debug)]
pub struct LevelSet<T: Real> {
    lambda: T,
    grid: GridSpec<T>,
    green: Vec<T>,
    valid: Vec<bool>,
}

impl<T: Real> LevelSet<T> {
    pub fn new(p: &Potential<T>, lambda: T, grid: &GridSpec<T>, opts: &FoliationOptions<T>) -> Result<Self> {
        let kernel = match opts.backend {
            Backend::Grid => Some(LogKernel::new(grid)?),
            _ => None,
        };
        Self::with_kernel(p, lambda, grid, kernel.as_ref(), opts)
    }

    pub fn with_kernel(
        p: &Potential<T>,
        lambda: T,
        grid: &GridSpec<T>,
        kernel: Option<&LogKernel<T>>,
        opts: &FoliationOptions<T>,
    ) -> Result<Self> {
        if p.dim() != 1 || grid.style() != CoordinateStyle::Cartesian {
            return Err(Error::Unsupported("leaves are traced for n = 1 only".into()));
        }
        if !(lambda > T::zero()) {
            return Err(Error::Hypothesis(format!("leaf level {lambda} must be positive")));
        }
        let delta = opts.delta.min(lambda / T::lit(4.0));
        let lo = solve(p, lambda - delta, grid, kernel, opts)?;
        let hi = solve(p, lambda + delta, grid, kernel, opts)?;
        let interior = grid.interior_of(&grid.domain_mask());
        let green = (0..grid.len())
            .map(|i| -(hi.envelope.value(i) - lo.envelope.value(i)) / (delta + delta))
            .collect();
        // nodes next to the discrete free boundary carry switching noise;
        // G is harmonic, so it is fitted further in and continued outward
        let valid = (0..grid.len())
            .map(|i| interior[i] && !near(grid, i, FIT_BAND, |k| lo.coincidence[k]))
            .collect();
        Ok(Self {
            lambda,
            grid: *grid,
            green,
            valid,
        })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    fn fit(&self, x: [T; 2]) -> Option<HarmonicQuad<T>> {
        fit_harmonic(&self.grid, x, |i| self.valid[i], |i| self.green[i])
    }

    /// `G_λ(x)`, continued harmonically past the free boundary.
    pub fn green(&self, x: [T; 2]) -> Option<T> {
        self.fit(x).map(|f| f.value(x))
    }

    /// `T_λ(x) = G_λ(x) - ln|x|^2`.
    pub fn crossing_time(&self, x: [T; 2]) -> Option<T> {
        self.green(x).map(|g| g - (x[0] * x[0] + x[1] * x[1]).ln())
    }

    /// `{T_λ = 0}`, the boundary of the discs on this level.
    pub fn boundary(&self) -> Result<Polyline<T>> {
        let g = &self.grid;
        let big = T::lit(1e30);
        let f: Vec<T> = (0..g.len())
            .map(|i| {
                let c = g.coords(i);
                let x = [c[0], c[1]];
                if self.valid[i] {
                    let t = self.green[i] - g.norm_sq(i).ln();
                    return if t.is_finite() { t } else { big };
                }
                if !g.in_domain(i) {
                    return -T::one();
                }
                self.crossing_time(x).unwrap_or(-T::one())
            })
            .collect();
        level_loop(g, &f, &g.domain_mask(), Crossing::Linear, [T::zero(); 2])
    }

    /// Point of `{T_λ = 0}` on the ray of angle `theta`.
    pub fn anchor(&self, theta: T) -> Option<[T; 2]> {
        let (s, c) = theta.sin_cos();
        let at = |r: T| [r * c, r * s];
        let positive = |r: T| self.crossing_time(at(r)).is_some_and(|v| v > T::zero());
        let (mut lo, mut hi) = (self.grid.spacing(), self.grid.radius() * T::lit(0.98));
        if !positive(lo) || positive(hi) {
            return None;
        }
        for _ in 0..80 {
            let mid = (lo + hi) / T::lit(2.0);
            if positive(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(at((lo + hi) / T::lit(2.0)))
    }

    /// `dz/dt` in the chart.
    fn velocity(&self, t: T, z: [T; 2]) -> Result<[T; 2]> {
        let e = (t / T::lit(2.0)).exp();
        let x = [z[0] / e, z[1] / e];
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == T::zero() {
            return Ok([T::zero(); 2]);
        }
        let exited = || Error::LeafExited {
            x: x[0].to_f64_lossy(),
            y: x[1].to_f64_lossy(),
        };
        if r2.sqrt() >= self.grid.radius() {
            return Err(exited());
        }
        let grad = self.fit(x).ok_or_else(exited)?.gradient(x);
        let half = r2 / T::lit(2.0);
        let w = [x[0] - half * grad[0], x[1] - half * grad[1]];
        let w2 = w[0] * w[0] + w[1] * w[1];
        if w2 <= r2 * T::lit(1e-8) {
            return Err(Error::DegenerateFiber {
                x: x[0].to_f64_lossy(),
                y: x[1].to_f64_lossy(),
            });
        }
        let k = e / (w2 + w2);
        Ok([k * (x[0] * w2 - r2 * w[0]), k * (x[1] * w2 - r2 * w[1])])
    }
}

/// One sample of a traced leaf.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafSample<T: Real> {
    pub t: T,
    /// Position in the fiber `{τ = e^{-t/2}}`.
    pub x: [T; 2],
    /// Chart coordinate `x e^{t/2}`.
    pub z: [T; 2],
    /// Hamiltonian of the ray at `(x, t)`, where it can be evaluated.
    pub h: Option<T>,
}

/// A leaf on the ray `τ = e^{-t/2}`; the disc follows by `S¹`-equivariance.
#[derive(Clone, Debug)]
pub struct Leaf<T: Real> {
    pub anchor: [T; 2],
    /// `H₀(anchor)` from the ray, or the level's λ when it cannot be evaluated.
    pub lambda: T,
    /// `T_λ(anchor)`, zero when the anchor lies on the disc boundary.
    pub offset: T,
    pub samples: Vec<LeafSample<T>>,
    /// Central-fiber limit of the chart coordinate.
    pub limit: [T; 2],
    /// `max |H - λ| / λ` over the samples where `H` is available.
    pub drift: T,
    pub drift_samples: usize,
    /// `{T_λ = 0}`, the boundary of the disc at `τ = 1`.
    pub boundary: Polyline<T>,
}

impl<T: Real> Leaf<T> {
    fn fixed(anchor: [T; 2], t_max: T) -> Self {
        let s = |t| LeafSample {
            t,
            x: anchor,
            z: anchor,
            h: Some(T::zero()),
        };
        Self {
            anchor,
            lambda: T::zero(),
            offset: T::zero(),
            samples: vec![s(T::zero()), s(t_max)],
            limit: anchor,
            drift: T::zero(),
            drift_samples: 0,
            boundary: Polyline::empty(),
        }
    }
}

/// Aitken extrapolation of a geometrically converging complex sequence.
fn aitken<T: Real>(z0: [T; 2], z1: [T; 2], z2: [T; 2]) -> [T; 2] {
    let d1 = [z2[0] - z1[0], z2[1] - z1[1]];
    let d0 = [z1[0] - z0[0], z1[1] - z0[1]];
    let den = [d1[0] - d0[0], d1[1] - d0[1]];
    let den2 = den[0] * den[0] + den[1] * den[1];
    let scale = z2[0].abs() + z2[1].abs() + T::one();
    if den2 <= (T::epsilon() * scale).powi(2) {
        return z2;
    }
    // z2 - d1^2 / den
    let sq = [d1[0] * d1[0] - d1[1] * d1[1], T::lit(2.0) * d1[0] * d1[1]];
    let q = [
        (sq[0] * den[0] + sq[1] * den[1]) / den2,
        (sq[1] * den[0] - sq[0] * den[1]) / den2,
    ];
    [z2[0] - q[0], z2[1] - q[1]]
}

/// Traces the leaf of `level` through `anchor` over `[0, t_max]` by RK4.
pub fn trace_on_level<T: Real>(
    level: &LevelSet<T>,
    smoother: Option<&RaySmoother<'_, T>>,
    anchor: [T; 2],
    t_max: T,
    opts: &FoliationOptions<T>,
) -> Result<Leaf<T>> {
    if anchor == [T::zero(); 2] {
        return Ok(Leaf::fixed(anchor, t_max));
    }
    let n = opts.steps.max(4);
    let dt = t_max / T::from_usize_lossy(n);
    let half = dt / T::lit(2.0);
    let axpy = |z: [T; 2], k: [T; 2], s: T| [z[0] + s * k[0], z[1] + s * k[1]];
    let mut z = anchor;
    let mut zs = vec![z];
    for step in 0..n {
        let t = dt * T::from_usize_lossy(step);
        let k1 = level.velocity(t, z)?;
        let k2 = level.velocity(t + half, axpy(z, k1, half))?;
        let k3 = level.velocity(t + half, axpy(z, k2, half))?;
        let k4 = level.velocity(t + dt, axpy(z, k3, dt))?;
        let six = T::lit(6.0);
        z = [
            z[0] + dt * (k1[0] + T::lit(2.0) * (k2[0] + k3[0]) + k4[0]) / six,
            z[1] + dt * (k1[1] + T::lit(2.0) * (k2[1] + k3[1]) + k4[1]) / six,
        ];
        zs.push(z);
    }
    let lambda = smoother
        .and_then(|sm| sm.h0(anchor))
        .filter(|l| *l > T::zero())
        .unwrap_or(level.lambda());
    let stride = opts.drift_stride.max(1);
    let mut drift = T::zero();
    let mut drift_samples = 0;
    let samples: Vec<LeafSample<T>> = zs
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let t = dt * T::from_usize_lossy(k);
            let e = (t / T::lit(2.0)).exp();
            let x = [z[0] / e, z[1] / e];
            let h = match smoother {
                Some(s) if k % stride == 0 || k == n => s.h_at(x, t),
                _ => None,
            };
            if let Some(h) = h {
                drift = drift.max((h - lambda).abs() / lambda);
                drift_samples += 1;
            }
            LeafSample { t, x, z, h }
        })
        .collect();
    let back = ((T::from_usize_lossy(n) / t_max).round().to_usize().unwrap_or(1)).clamp(1, n / 2);
    let limit = aitken(zs[n - 2 * back], zs[n - back], zs[n]);
    Ok(Leaf {
        anchor,
        lambda,
        offset: level.crossing_time(anchor).unwrap_or(T::nan()),
        samples,
        limit,
        drift,
        drift_samples,
        boundary: level.boundary()?,
    })
}

/// Traces the leaf through `anchor` at level `λ = H₀(anchor)`.
pub fn trace_leaf<T: Real>(
    ray: &GeodesicRay<T>,
    p: &Potential<T>,
    anchor: [T; 2],
    opts: &FoliationOptions<T>,
) -> Result<Leaf<T>> {
    if anchor == [T::zero(); 2] {
        return Ok(Leaf::fixed(anchor, ray.t_max()));
    }
    let smoother = RaySmoother::new(ray);
    let lambda = smoother.h0(anchor).ok_or_else(|| {
        Error::Hypothesis(format!(
            "H_0 cannot be evaluated at ({}, {}); the anchor must satisfy 0 < H_0 < c",
            anchor[0], anchor[1]
        ))
    })?;
    if !(lambda > T::zero() && lambda < ray.cutoff()) {
        return Err(Error::LambdaOutOfRange {
            lambda: lambda.to_f64_lossy(),
            cutoff: ray.cutoff().to_f64_lossy(),
        });
    }
    let level = LevelSet::new(p, lambda, ray.grid(), opts)?;
    trace_on_level(&level, Some(&smoother), anchor, ray.t_max(), opts)
}

/// `dd^cφ`-area of the leaf's disc: the flux of `d^cφ` through its boundary.
pub fn disc_area<T: Real>(leaf: &Leaf<T>, p: &Potential<T>) -> Result<T> {
    if leaf.lambda == T::zero() {
        return Ok(T::zero());
    }
    if leaf.boundary.is_empty() || !leaf.boundary.closed {
        return Err(Error::OpenPolyline);
    }
    boundary_mass(p, &leaf.boundary)
}

#[cfg(test)]
mod tests;
