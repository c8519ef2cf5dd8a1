use rayon::prelude::*;

use super::{assemble_geodesic_with_slack, GeodesicRay, DEFAULT_SLACK};
use crate::envelope::{
    grid_envelope_with_kernel, radial_envelope, reinhardt_envelope, slice_certified, Backend,
    EnvelopeResult, LogKernel,
};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::measure::{ma_mass, Region};
use crate::potential::Potential;
use crate::scalar::Real;

/// Settings for [`ray_from_potential`].
#[derive(Clone, Debug)]
pub struct RayOptions<T: Real> {
    pub backend: Backend,
    pub n_lambda: usize,
    pub n_t: usize,
    /// Cutoff `c`; defaults to `0.8` times the mass of the ball.
    pub cutoff: Option<T>,
    /// Grid solver tolerance.
    pub tol: T,
    pub max_iters: usize,
    pub slack: T,
    /// Allowed shortfall of the Lelong slope in [`slice_certified`].
    pub lelong_tol: T,
}

impl<T: Real> RayOptions<T> {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            n_lambda: 64,
            n_t: 2048,
            cutoff: None,
            tol: T::lit(1e-12),
            max_iters: 200_000,
            slack: T::lit(DEFAULT_SLACK),
            lelong_tol: T::lit(0.05),
        }
    }
}

/// `λ_i = i c / n`, `i = 0..n`.
pub fn lambda_grid<T: Real>(c: T, n: usize) -> Vec<T> {
    (0..n)
        .map(|i| c * T::from_usize_lossy(i) / T::from_usize_lossy(n))
        .collect()
}

/// `0.8` times the Monge-Ampère mass of the grid ball.
pub fn default_cutoff<T: Real>(p: &Potential<T>, grid: &GridSpec<T>) -> Result<T> {
    Ok(T::lit(0.8) * ma_mass(p, &Region::Disc(grid.radius()))?)
}

/// `ln(mass / λ_1) + 2`.
pub fn default_t_max<T: Real>(mass: T, lambda1: T) -> T {
    (mass / lambda1).ln() + T::lit(2.0)
}

/// `n` equispaced nodes on `[0, t_max]`.
pub fn uniform_t_grid<T: Real>(t_max: T, n: usize) -> Vec<T> {
    if n < 2 {
        return vec![T::zero(); n];
    }
    let last = T::from_usize_lossy(n - 1);
    (0..n).map(|j| t_max * T::from_usize_lossy(j) / last).collect()
}

/// One envelope per λ, solved in parallel; the grid backend shares its kernel.
pub fn envelope_slices<T: Real>(
    p: &Potential<T>,
    lambdas: &[T],
    grid: &GridSpec<T>,
    backend: Backend,
    tol: T,
    max_iters: usize,
) -> Result<Vec<EnvelopeResult<T>>> {
    map_slices(p, lambdas, grid, backend, tol, max_iters, Ok)
}

fn map_slices<T: Real, R: Send, F>(
    p: &Potential<T>,
    lambdas: &[T],
    grid: &GridSpec<T>,
    backend: Backend,
    tol: T,
    max_iters: usize,
    f: F,
) -> Result<Vec<R>>
where
    F: Fn(EnvelopeResult<T>) -> Result<R> + Sync,
{
    match backend {
        Backend::Grid => {
            let kernel = LogKernel::new(grid)?;
            lambdas
                .par_iter()
                .map(|&l| f(grid_envelope_with_kernel(p, l, &kernel, tol, max_iters)?))
                .collect()
        }
        Backend::Radial => lambdas
            .par_iter()
            .map(|&l| f(radial_envelope(p, l, grid)?))
            .collect(),
        Backend::Reinhardt => lambdas
            .par_iter()
            .map(|&l| f(reinhardt_envelope(p, l, grid)?))
            .collect(),
    }
}

/// Solves the slice family for `p` and assembles the ray.
pub fn ray_from_potential<T: Real>(
    p: &Potential<T>,
    grid: &GridSpec<T>,
    opts: &RayOptions<T>,
) -> Result<GeodesicRay<T>> {
    certified_ray(p, grid, opts).map(|(ray, _)| ray)
}

/// [`ray_from_potential`] together with `lambda_certified`, the largest
/// λ-node whose slice passes [`slice_certified`] (`None` if none does).
pub fn certified_ray<T: Real>(
    p: &Potential<T>,
    grid: &GridSpec<T>,
    opts: &RayOptions<T>,
) -> Result<(GeodesicRay<T>, Option<T>)> {
    if opts.n_lambda < 2 || opts.n_t < 2 {
        return Err(Error::Hypothesis("need at least two lambda and two t nodes".into()));
    }
    let mass = ma_mass(p, &Region::Disc(grid.radius()))?;
    let c = match opts.cutoff {
        Some(c) => c,
        None => T::lit(0.8) * mass,
    };
    if !(c > T::zero() && c <= mass) {
        return Err(Error::Hypothesis(format!(
            "cutoff {c} must lie in (0, {mass}], the mass of the ball"
        )));
    }
    let lambdas = lambda_grid(c, opts.n_lambda);
    let parts = map_slices(p, &lambdas, grid, opts.backend, opts.tol, opts.max_iters, |e| {
        let ok = slice_certified(&e, opts.lelong_tol)?;
        Ok((e.normalized, e.pole, ok))
    })?;
    let certified = lambdas
        .iter()
        .zip(&parts)
        .filter(|(_, part)| part.2)
        .map(|(&l, _)| l)
        .last();
    let pole = parts.last().map(|part| part.1.clone());
    let slices = parts.into_iter().map(|(a, _, _)| a).collect();
    let t_grid = uniform_t_grid(default_t_max(mass, lambdas[1]), opts.n_t);
    let ray = assemble_geodesic_with_slack(slices, &lambdas, &t_grid, c, opts.slack)?;
    let ray = match pole {
        Some(pole) if opts.backend == Backend::Grid => ray.with_pole(pole)?,
        _ => ray,
    };
    Ok((ray, certified))
}
