//! `S¹`-invariant geodesic rays `u(x, t) = sup_λ {a_λ(x) + λt}` built from
//! envelope slices, their Legendre inverses and the Hamiltonian.

mod build;
mod io;

pub use build::{
    certified_ray, default_cutoff, default_t_max, envelope_slices, lambda_grid, ray_from_potential,
    uniform_t_grid, RayOptions,
};
pub use io::{read_ray, write_ray};

use rayon::prelude::*;

use crate::envelope::harmonic_residual;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::hull::LineEnvelope;
use crate::potential::Potential;
use crate::scalar::Real;

/// Default tolerance for `a_λ >= a_μ` (`λ < μ`) and `a_λ <= 0`.
pub const DEFAULT_SLACK: f64 = 1e-8;

/// A geodesic ray sampled on `space x t`.
///
/// `u` is never stored densely; each node keeps the upper envelope of its
/// lines `t -> a_i(x) + λ_i t`.
#[derive(Clone, Debug)]
pub struct GeodesicRay<T: Real> {
    grid: GridSpec<T>,
    lambdas: Vec<T>,
    t_grid: Vec<T>,
    cutoff: T,
    slices: Vec<ScalarField<T>>,
    pole: ScalarField<T>,
    lines: Vec<Option<LineEnvelope<T>>>,
}

impl<T: Real> GeodesicRay<T> {
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn lambdas(&self) -> &[T] {
        &self.lambdas
    }

    pub fn t_grid(&self) -> &[T] {
        &self.t_grid
    }

    pub fn t_max(&self) -> T {
        *self.t_grid.last().unwrap()
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    pub fn slices(&self) -> &[ScalarField<T>] {
        &self.slices
    }

    /// The pole weight `a_λ` was normalized with: `ln|z|^2` unless replaced
    /// by [`GeodesicRay::with_pole`]; `-inf` at the pole.
    pub fn pole(&self) -> &ScalarField<T> {
        &self.pole
    }

    pub fn with_pole(mut self, pole: ScalarField<T>) -> Result<Self> {
        if !pole.grid().same_layout(&self.grid) {
            return Err(Error::GridMismatch("pole field grid differs from the ray".into()));
        }
        self.pole = pole;
        Ok(self)
    }

    /// Largest gap of the λ-grid (the gap up to `c` included).
    pub fn delta_lambda(&self) -> T {
        let mut d = self.cutoff - *self.lambdas.last().unwrap();
        for w in self.lambdas.windows(2) {
            d = d.max(w[1] - w[0]);
        }
        d
    }

    /// Per-node line envelope, `None` outside the domain.
    pub fn lines_at(&self, node: usize) -> Option<&LineEnvelope<T>> {
        self.lines[node].as_ref()
    }

    /// `u(x, t)`; `-inf` where no slice is finite.
    pub fn u(&self, node: usize, t: T) -> T {
        match &self.lines[node] {
            Some(env) => env.value(t),
            None => T::neg_infinity(),
        }
    }

    /// Index and value of the maximizing λ-node, ties to the larger λ.
    pub fn argmax(&self, node: usize, t: T) -> Option<(usize, T)> {
        self.lines[node].as_ref().map(|env| env.argmax(t))
    }

    /// `u(·, t_j)` as a field.
    pub fn u_field(&self, j: usize) -> Result<ScalarField<T>> {
        let t = self.t_grid[j];
        let values = (0..self.grid.len()).map(|i| self.u(i, t)).collect();
        ScalarField::with_sentinels(self.grid, values, self.slices[0].mask().to_vec())
    }
}

/// Assembles `u = max_i {a_i + λ_i t}` from slices on an increasing λ-grid
/// in `[0, c)`.
pub fn assemble_geodesic<T: Real>(
    slices: Vec<ScalarField<T>>,
    lambdas: &[T],
    t_grid: &[T],
    c: T,
) -> Result<GeodesicRay<T>> {
    assemble_geodesic_with_slack(slices, lambdas, t_grid, c, T::lit(DEFAULT_SLACK))
}

pub fn assemble_geodesic_with_slack<T: Real>(
    slices: Vec<ScalarField<T>>,
    lambdas: &[T],
    t_grid: &[T],
    c: T,
    slack: T,
) -> Result<GeodesicRay<T>> {
    if slices.is_empty() || slices.len() != lambdas.len() {
        return Err(Error::Hypothesis(format!(
            "{} slices for {} lambda nodes",
            slices.len(),
            lambdas.len()
        )));
    }
    for (k, &l) in lambdas.iter().enumerate() {
        if !(l >= T::zero() && l < c) {
            return Err(Error::LambdaOutOfRange {
                lambda: l.to_f64_lossy(),
                cutoff: c.to_f64_lossy(),
            });
        }
        if k > 0 && !(l > lambdas[k - 1]) {
            return Err(Error::Hypothesis("lambda grid must increase strictly".into()));
        }
    }
    if t_grid.is_empty()
        || !(t_grid[0] >= T::zero())
        || t_grid.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::Hypothesis(
            "t grid must be nonempty, start at t >= 0 and increase strictly".into(),
        ));
    }
    let grid = *slices[0].grid();
    if let Some(s) = slices.iter().find(|s| !s.grid().same_layout(&grid)) {
        return Err(Error::GridMismatch(format!(
            "slice grid {} differs from {}",
            s.grid().header(),
            grid.header()
        )));
    }
    let mask = slices[0].mask().to_vec();
    let lines: Vec<Option<LineEnvelope<T>>> = (0..grid.len())
        .into_par_iter()
        .map(|node| node_lines(&slices, lambdas, node, mask[node], slack))
        .collect::<Result<_>>()?;
    let pole = ScalarField::with_sentinels(
        grid,
        (0..grid.len()).map(|i| grid.norm_sq(i).ln()).collect(),
        mask,
    )?;
    Ok(GeodesicRay {
        grid,
        lambdas: lambdas.to_vec(),
        t_grid: t_grid.to_vec(),
        cutoff: c,
        slices,
        pole,
        lines,
    })
}

fn node_lines<T: Real>(
    slices: &[ScalarField<T>],
    lambdas: &[T],
    node: usize,
    inside: bool,
    slack: T,
) -> Result<Option<LineEnvelope<T>>> {
    if !inside {
        return Ok(None);
    }
    let a: Vec<T> = slices.iter().map(|s| s.value(node)).collect();
    for (k, &v) in a.iter().enumerate() {
        if v.is_nan() || v > slack {
            return Err(Error::Hypothesis(format!(
                "a_lambda = {v} > 0 at node {node}, lambda = {}",
                lambdas[k]
            )));
        }
        if k > 0 && v > a[k - 1] + slack {
            return Err(Error::NonMonotoneSlices {
                lo: k - 1,
                hi: k,
                node,
                excess: (v - a[k - 1]).to_f64_lossy(),
            });
        }
    }
    let (m, c): (Vec<T>, Vec<T>) = lambdas
        .iter()
        .zip(&a)
        .filter(|(_, v)| v.is_finite())
        .map(|(&l, &v)| (l, v))
        .unzip();
    Ok((!m.is_empty()).then(|| LineEnvelope::new(&m, &c)))
}

/// `inf_{t >= 0} {u(x, t) - λt}` at one node, taken at the exact breakpoint.
pub fn legendre_at<T: Real>(env: &LineEnvelope<T>, lambda: T) -> T {
    let lines = env.lines();
    let k = lines.partition_point(|l| l.0 < lambda);
    if k == lines.len() {
        return T::neg_infinity();
    }
    let start = if k == 0 {
        T::zero()
    } else {
        env.breakpoints()[k - 1].max(T::zero())
    };
    let (m, c, _) = lines[k];
    c + (m - lambda) * start
}

/// Legendre inverse `α_λ(x) = inf_{t >= 0} {u(x, t) - λt}` for each λ.
pub fn legendre_slices<T: Real>(ray: &GeodesicRay<T>, lambdas: &[T]) -> Result<Vec<ScalarField<T>>> {
    lambdas
        .iter()
        .map(|&l| {
            if !(l >= T::zero() && l < ray.cutoff) {
                return Err(Error::LambdaOutOfRange {
                    lambda: l.to_f64_lossy(),
                    cutoff: ray.cutoff.to_f64_lossy(),
                });
            }
            let values = ray
                .lines
                .iter()
                .map(|env| match env {
                    Some(env) => legendre_at(env, l),
                    None => T::nan(),
                })
                .collect();
            ScalarField::with_sentinels(ray.grid, values, ray.slices[0].mask().to_vec())
        })
        .collect()
}

/// `H(x, t) = λ*`, the maximizing slope, with a finite-difference cross-check.
#[derive(Clone, Debug)]
pub struct HamiltonianField<'a, T: Real> {
    ray: &'a GeodesicRay<T>,
    /// `H(·, 0)`.
    pub h0: ScalarField<T>,
    /// `max |∂_t u - λ*|` over all space and t nodes, with centred differences.
    pub fd_discrepancy: T,
    /// Node and t-index where the discrepancy is largest.
    pub worst: (usize, usize),
}

impl<T: Real> HamiltonianField<'_, T> {
    pub fn at(&self, node: usize, t: T) -> Option<T> {
        self.ray.argmax(node, t).map(|(_, l)| l)
    }

    pub fn field(&self, j: usize) -> Result<ScalarField<T>> {
        let t = self.ray.t_grid[j];
        let values = (0..self.ray.grid.len())
            .map(|i| self.at(i, t).unwrap_or(T::nan()))
            .collect();
        ScalarField::with_sentinels(self.ray.grid, values, self.ray.slices[0].mask().to_vec())
    }
}

fn fd_slope<T: Real>(ray: &GeodesicRay<T>, node: usize, j: usize) -> T {
    let tg = &ray.t_grid;
    let (lo, hi) = match (j, tg.len()) {
        (_, 1) => return T::nan(),
        (0, _) => (0, 1),
        (j, n) if j + 1 == n => (j - 1, j),
        (j, _) => (j - 1, j + 1),
    };
    (ray.u(node, tg[hi]) - ray.u(node, tg[lo])) / (tg[hi] - tg[lo])
}

pub fn hamiltonian<T: Real>(ray: &GeodesicRay<T>) -> Result<HamiltonianField<'_, T>> {
    let nt = ray.t_grid.len();
    let (fd_discrepancy, worst) = (0..ray.grid.len())
        .into_par_iter()
        .filter(|&i| ray.lines[i].is_some())
        .map(|i| {
            let mut best = (T::zero(), (i, 0));
            for j in 0..nt {
                let (_, l) = ray.argmax(i, ray.t_grid[j]).unwrap();
                let d = (fd_slope(ray, i, j) - l).abs();
                if d > best.0 {
                    best = (d, (i, j));
                }
            }
            best
        })
        .reduce(
            || (T::zero(), (0, 0)),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let values = (0..ray.grid.len())
        .map(|i| ray.argmax(i, T::zero()).map_or(T::nan(), |(_, l)| l))
        .collect();
    let h0 = ScalarField::with_sentinels(ray.grid, values, ray.slices[0].mask().to_vec())?;
    Ok(HamiltonianField {
        ray,
        h0,
        fd_discrepancy,
        worst,
    })
}

/// `Φ_w = u - ct`, claimed only where the maximizer is below the top λ-node.
#[derive(Clone, Debug)]
pub struct WeakSolution<'a, T: Real> {
    ray: &'a GeodesicRay<T>,
}

impl<T: Real> WeakSolution<'_, T> {
    /// `None` where the value is not claimed.
    pub fn value(&self, node: usize, t: T) -> Option<T> {
        let top = self.ray.lambdas.len() - 1;
        match self.ray.argmax(node, t) {
            Some((k, _)) if k < top => Some(self.ray.u(node, t) - self.ray.cutoff * t),
            _ => None,
        }
    }

    /// `Φ_w(·, t_j)`, masked to the claimed nodes.
    pub fn field(&self, j: usize) -> Result<ScalarField<T>> {
        let t = self.ray.t_grid[j];
        let n = self.ray.grid.len();
        let vals: Vec<Option<T>> = (0..n).map(|i| self.value(i, t)).collect();
        let mask = vals.iter().map(|v| v.is_some()).collect();
        let values = vals.into_iter().map(|v| v.unwrap_or(T::nan())).collect();
        ScalarField::with_sentinels(self.ray.grid, values, mask)
    }
}

pub fn weak_solution<T: Real>(ray: &GeodesicRay<T>, c: T) -> Result<WeakSolution<'_, T>> {
    if c != ray.cutoff {
        return Err(Error::Hypothesis(format!(
            "cutoff {c} differs from the ray cutoff {}",
            ray.cutoff
        )));
    }
    Ok(WeakSolution { ray })
}

/// Diagnostics of the homogeneous Monge-Ampère equation on a ray.
#[derive(Clone, Debug)]
pub struct HmaeReport<T: Real> {
    /// Smallest second difference of `u` in `t` (should be `>= -tol`).
    pub convexity_defect: T,
    /// Smallest first difference of `u` in `t` (should be `>= -tol`).
    pub monotonicity_defect: T,
    /// Per λ-node `max |Δ_h(φ + a_λ)|` on `{a_λ < -tol}` minus the pole.
    pub slice_residuals: Vec<T>,
}

impl<T: Real> HmaeReport<T> {
    pub fn max_slice_residual(&self) -> T {
        self.slice_residuals.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

pub fn hmae_residual<T: Real>(ray: &GeodesicRay<T>, p: &Potential<T>, tol: T) -> Result<HmaeReport<T>> {
    if p.dim() != 1 {
        return Err(Error::Unsupported("HMAE residual needs n = 1".into()));
    }
    let tg = &ray.t_grid;
    let (convexity_defect, monotonicity_defect) = (0..ray.grid.len())
        .into_par_iter()
        .filter(|&i| ray.lines[i].is_some())
        .map(|i| {
            let u: Vec<T> = tg.iter().map(|&t| ray.u(i, t)).collect();
            let mut conv = T::zero();
            let mut mono = T::zero();
            for j in 1..u.len() {
                mono = mono.min(u[j] - u[j - 1]);
                if j + 1 < u.len() {
                    let (l, r) = (tg[j] - tg[j - 1], tg[j + 1] - tg[j]);
                    let d2 = (u[j + 1] - u[j]) / r - (u[j] - u[j - 1]) / l;
                    conv = conv.min(d2);
                }
            }
            (conv, mono)
        })
        .reduce(|| (T::zero(), T::zero()), |a, b| (a.0.min(b.0), a.1.min(b.1)));
    let phi = p.sample(&ray.grid)?;
    let slice_residuals = ray
        .slices
        .par_iter()
        .map(|a| {
            let f = phi.zip_with(a, |x, y| x + y)?;
            let region: Vec<bool> = a.values().iter().map(|&v| v < -tol).collect();
            harmonic_residual(&f, &region)
        })
        .collect::<Result<_>>()?;
    Ok(HmaeReport {
        convexity_defect,
        monotonicity_defect,
        slice_residuals,
    })
}


/// Nodes where `{α_λ < -tol}` and `{H(·, 0) < λ}` disagree, ignoring the
/// one-node band (3^d neighbourhood) around either set's boundary.
pub fn level_set_mismatch<T: Real>(ray: &GeodesicRay<T>, lambda: T, tol: T) -> Result<Vec<usize>> {
    let alpha = legendre_slices(ray, &[lambda])?.remove(0);
    let grid = &ray.grid;
    let below_a: Vec<bool> = alpha.values().iter().map(|&a| a < -tol).collect();
    let below_h: Vec<bool> = (0..grid.len())
        .map(|i| ray.argmax(i, T::zero()).is_some_and(|(_, h)| h < lambda))
        .collect();
    let offsets = crate::grid::neighbourhood_offsets(grid.axes());
    let on_edge = |set: &[bool], i: usize| {
        offsets
            .iter()
            .any(|o| grid.shifted(i, &o[..grid.axes()]).is_some_and(|k| set[k] != set[i]))
    };
    Ok((0..grid.len())
        .filter(|&i| ray.lines[i].is_some() && below_a[i] != below_h[i])
        .filter(|&i| !on_edge(&below_a, i) && !on_edge(&below_h, i))
        .collect())
}

/// `max |α_{λ_i} - a_{λ_i}|` over the λ-nodes and the domain: the
/// slice → ray → slice round trip. Equal infinities at the pole count as zero.
pub fn involution_error<T: Real>(ray: &GeodesicRay<T>) -> Result<T> {
    let alphas = legendre_slices(ray, &ray.lambdas)?;
    let mask = ray.slices[0].mask();
    let mut worst = T::zero();
    for (alpha, a) in alphas.iter().zip(&ray.slices) {
        for i in (0..mask.len()).filter(|&i| mask[i]) {
            let (x, y) = (alpha.value(i), a.value(i));
            if x != y {
                let d = (x - y).abs();
                worst = if d.is_nan() { T::infinity() } else { worst.max(d) };
            }
        }
    }
    Ok(worst)
}
