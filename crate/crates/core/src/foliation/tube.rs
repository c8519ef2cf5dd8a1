use rayon::prelude::*;

use super::{trace_leaf, trace_on_level, FoliationOptions, LevelSet, RaySmoother};
use crate::error::{Error, Result};
use crate::geodesic::GeodesicRay;
use crate::potential::Potential;
use crate::scalar::Real;

/// One leaf of the map: central-fiber point `u` and its `τ = 1` endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeEntry<T: Real> {
    pub u: [T; 2],
    pub z: [T; 2],
    pub lambda: T,
}

/// Sampled correspondence `u -> T(u)`.
#[derive(Clone, Debug)]
pub struct TubularMap<T: Real> {
    pub entries: Vec<TubeEntry<T>>,
    /// Injectivity threshold (the grid spacing).
    pub spacing: T,
}

fn dist<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl<T: Real> TubularMap<T> {
    pub fn new(entries: Vec<TubeEntry<T>>, spacing: T) -> Result<Self> {
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                let (a, b) = (&entries[i], &entries[j]);
                if dist(a.z, b.z) > T::zero() && dist(a.u, b.u) < spacing {
                    return Err(Error::NonInjective(i, j));
                }
            }
        }
        Ok(Self { entries, spacing })
    }

    /// Endpoint of the entry whose `u` is closest to `u`.
    pub fn nearest(&self, u: [T; 2]) -> Option<&TubeEntry<T>> {
        self.entries
            .iter()
            .min_by(|a, b| dist(a.u, u).partial_cmp(&dist(b.u, u)).unwrap())
    }
}

/// Traces one leaf per anchor, each on its own level `H₀(anchor)`.
pub fn build_tubular_map<T: Real>(
    ray: &GeodesicRay<T>,
    p: &Potential<T>,
    anchors: &[[T; 2]],
    opts: &FoliationOptions<T>,
) -> Result<TubularMap<T>> {
    let entries = anchors
        .par_iter()
        .map(|&a| {
            let leaf = trace_leaf(ray, p, a, opts)?;
            Ok(TubeEntry {
                u: leaf.limit,
                z: a,
                lambda: leaf.lambda,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TubularMap::new(entries, ray.grid().spacing())
}

/// Anchors at `angles` equispaced directions on each level, sharing the
/// envelopes of a level.
pub fn tubular_map_on_levels<T: Real>(
    ray: &GeodesicRay<T>,
    p: &Potential<T>,
    levels: &[T],
    angles: usize,
    opts: &FoliationOptions<T>,
) -> Result<TubularMap<T>> {
    let smoother = RaySmoother::new(ray);
    let per_level = levels
        .par_iter()
        .map(|&l| {
            let level = LevelSet::new(p, l, ray.grid(), opts)?;
            (0..angles)
                .map(|k| {
                    let theta = T::lit(2.0) * T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(angles);
                    let a = level.anchor(theta).ok_or_else(|| {
                        Error::Hypothesis(format!("level {l} has no boundary point at angle {theta}"))
                    })?;
                    let leaf = trace_on_level(&level, Some(&smoother), a, ray.t_max(), opts)?;
                    Ok(TubeEntry {
                        u: leaf.limit,
                        z: a,
                        lambda: l,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    TubularMap::new(per_level.into_iter().flatten().collect(), ray.grid().spacing())
}

/// Comparison of `T^*ω` with the central-fiber form.
#[derive(Clone, Debug)]
pub struct PullbackReport<T: Real> {
    /// `max |ρ_φ(T(u)) det DT(u) - ρ_N(u)| / ρ_N(u)`.
    pub max_deviation: T,
    pub mean_deviation: T,
    /// Per-entry deviation, `None` for the fixed point `u = 0`.
    pub deviations: Vec<Option<T>>,
    /// Mean distance to the neighbours used for `DT` (the differencing step).
    pub step: T,
}

/// Number of neighbours in the least-squares Jacobian.
const NEIGHBOURS: usize = 6;

/// Checks `T^*(dd^cφ) = ω_N` with `ω_N = du/(π|u|^2 ∂_λG_λ(0))` on the sampled
/// map, using affine least squares over nearby entries for `DT`.
pub fn check_pullback<T: Real>(
    map: &TubularMap<T>,
    ray: &GeodesicRay<T>,
    p: &Potential<T>,
) -> Result<PullbackReport<T>> {
    if p.dim() != 1 {
        return Err(Error::Unsupported("pullback check needs n = 1".into()));
    }
    let smoother = RaySmoother::new(ray);
    let es = &map.entries;
    if es.len() < 4 {
        return Err(Error::TooCoarse(format!(
            "{} anchors cannot difference a two-dimensional map",
            es.len()
        )));
    }
    let mut deviations = Vec::with_capacity(es.len());
    let mut steps = T::zero();
    let mut used = 0usize;
    for (k, e) in es.iter().enumerate() {
        if e.u == [T::zero(); 2] {
            deviations.push(None);
            continue;
        }
        let mut order: Vec<usize> = (0..es.len()).filter(|&j| j != k).collect();
        order.sort_by(|&a, &b| dist(es[a].u, e.u).partial_cmp(&dist(es[b].u, e.u)).unwrap());
        order.truncate(NEIGHBOURS);
        if order.len() < 3 {
            return Err(Error::TooCoarse(format!("entry {k} has fewer than 3 neighbours")));
        }
        let mut a = [[T::zero(); 2]; 2];
        let mut bx = [T::zero(); 2];
        let mut by = [T::zero(); 2];
        for &j in &order {
            let du = [es[j].u[0] - e.u[0], es[j].u[1] - e.u[1]];
            let dz = [es[j].z[0] - e.z[0], es[j].z[1] - e.z[1]];
            steps += du[0].hypot(du[1]);
            used += 1;
            for r in 0..2 {
                for c in 0..2 {
                    a[r][c] += du[r] * du[c];
                }
                bx[r] += dz[0] * du[r];
                by[r] += dz[1] * du[r];
            }
        }
        let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det_a.abs() <= T::lit(1e-12) * (a[0][0] + a[1][1]).powi(2) {
            return Err(Error::TooCoarse(format!("neighbours of entry {k} are collinear")));
        }
        let solve = |b: [T; 2]| {
            [
                (a[1][1] * b[0] - a[0][1] * b[1]) / det_a,
                (a[0][0] * b[1] - a[1][0] * b[0]) / det_a,
            ]
        };
        let (jx, jy) = (solve(bx), solve(by));
        let det_j = jx[0] * jy[1] - jx[1] * jy[0];
        let slope = smoother.green_slope_at_origin(e.lambda).ok_or_else(|| {
            Error::TooCoarse(format!("no λ-derivative of G at level {}", e.lambda))
        })?;
        let u2 = e.u[0] * e.u[0] + e.u[1] * e.u[1];
        let rho_n = T::one() / (T::PI() * u2 * slope);
        let rho_phi = p.density(&[e.z[0], e.z[1], T::zero(), T::zero()]);
        deviations.push(Some((rho_phi * det_j.abs() - rho_n).abs() / rho_n));
    }
    let vals: Vec<T> = deviations.iter().flatten().copied().collect();
    let max_deviation = vals.iter().fold(T::zero(), |m, &v| m.max(v));
    let mean_deviation = vals.iter().copied().sum::<T>() / T::from_usize_lossy(vals.len().max(1));
    Ok(PullbackReport {
        max_deviation,
        mean_deviation,
        deviations,
        step: steps / T::from_usize_lossy(used.max(1)),
    })
}
