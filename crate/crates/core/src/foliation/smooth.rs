//! Off-grid evaluation of the Hamiltonian of a ray.
//!
//! Between λ-nodes the crossing time `T_{i+1/2} = -(a_{i+1} - a_i)/Δλ` is the
//! `t` at which the maximizer jumps; `G = T + pole` is harmonic on `B_{λ_i}`
//! and is continued across the free boundary by a local harmonic fit.

use super::fit::{cubic_lsq, fit_harmonic, lagrange4_slope, near, HarmonicQuad};
use crate::geodesic::GeodesicRay;
use crate::scalar::Real;

use super::FIT_BAND;

/// Slice values above `-CONTACT` count as touching the obstacle.
const CONTACT: f64 = 1e-10;

/// Midpoints in the least-squares window of [`RaySmoother::h_at`].
const WINDOW: usize = 8;

#[derive(Clone, Copy, Debug)]
pub struct RaySmoother<'a, T: Real> {
    ray: &'a GeodesicRay<T>,
}

impl<'a, T: Real> RaySmoother<'a, T> {
    pub fn new(ray: &'a GeodesicRay<T>) -> Self {
        Self { ray }
    }

    fn mid_lambda(&self, j: usize) -> T {
        let l = self.ray.lambdas();
        (l[j] + l[j + 1]) / T::lit(2.0)
    }

    /// Node `i` is strictly inside `B_{λ_j}`, clear of the contact band.
    fn direct(&self, j: usize, i: usize) -> bool {
        let ray = self.ray;
        let a0 = &ray.slices()[j];
        a0.mask()[i]
            && ray.pole().value(i).is_finite()
            && !near(ray.grid(), i, FIT_BAND, |k| !(a0.value(k) < -T::lit(CONTACT)))
    }

    fn mid_fit(&self, j: usize, x: [T; 2]) -> Option<HarmonicQuad<T>> {
        let ray = self.ray;
        let (a0, a1) = (&ray.slices()[j], &ray.slices()[j + 1]);
        let dl = ray.lambdas()[j + 1] - ray.lambdas()[j];
        let pole = ray.pole();
        fit_harmonic(
            ray.grid(),
            x,
            |i| self.direct(j, i),
            |i| -(a1.value(i) - a0.value(i)) / dl + pole.value(i),
        )
    }

    /// Mean of `ln λ` over `[λ_j, λ_{j+1}]`.
    fn mean_log(&self, j: usize) -> T {
        let l = self.ray.lambdas();
        let xlx = |v: T| if v > T::zero() { v * v.ln() - v } else { T::zero() };
        (xlx(l[j + 1]) - xlx(l[j])) / (l[j + 1] - l[j])
    }

    /// `T_{λ_{j+1/2}}(x)`, continued harmonically outside `B_{λ_j}`.
    pub fn crossing_time(&self, j: usize, x: [T; 2]) -> Option<T> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        self.mid_fit(j, x).map(|f| f.value(x) - r2.ln())
    }

    /// `G_{λ_{j+1/2}}(0)`.
    pub fn green_at_origin(&self, j: usize) -> Option<T> {
        let o = [T::zero(); 2];
        self.mid_fit(j, o).map(|f| f.value(o))
    }

    /// Crossing times at midpoints `start..start + len`. The `ln λ` part of
    /// the secant is averaged exactly; the `Δλ²/24` bias of the smooth
    /// remainder is removed by second differences of neighbouring secants.
    /// Entries without a usable secant or neighbours are `None`.
    fn stencil<F: Fn(usize) -> Option<T>>(&self, start: usize, len: usize, secant: F) -> Vec<Option<T>> {
        let m = self.ray.lambdas().len() - 1;
        let s: Vec<Option<T>> = (0..len + 2)
            .map(|k| {
                let j = (start + k).checked_sub(1).filter(|&j| j < m)?;
                secant(j).map(|v| v - self.mean_log(j))
            })
            .collect();
        (1..=len)
            .map(|i| {
                let v = s[i]?;
                let d2 = match (s[i - 1], s[i + 1]) {
                    (Some(a), Some(b)) => a - v - v + b,
                    (None, Some(b)) => v - b - b + (*s.get(i + 2)?)?,
                    (Some(a), None) => v - a - a + s.get(i.wrapping_sub(2)).copied().flatten()?,
                    (None, None) => return None,
                };
                Some(v - d2 / T::lit(24.0) + self.mid_lambda(start + i - 1).ln())
            })
            .collect()
    }

    /// Smooth `H(x, t)`: the λ with `T_λ(x) = t`, assuming a uniform λ-grid.
    pub fn h_at(&self, x: [T; 2], t: T) -> Option<T> {
        let m = self.ray.lambdas().len().checked_sub(1)?;
        if m < 5 {
            return None;
        }
        // first midpoint whose crossing time exceeds t; missing fits mean x
        // is deep in the coincidence set, where crossing times are negative
        let above = |j: usize| self.crossing_time(j, x).is_some_and(|v| v > t);
        let (mut lo, mut hi) = (0usize, m);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if above(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo == m {
            return None;
        }
        // ln λ is close to linear in T. Secants near the free boundary of x
        // carry switching noise of the discrete obstacle, so a least-squares
        // cubic over a window of midpoints is used instead of interpolation.
        let len = WINDOW.min(m - 1);
        let centre = lo.saturating_sub(len / 2);
        for shift in [0isize, 1, -1, 2, -2] {
            let start = (centre as isize + shift).clamp(0, (m - len) as isize) as usize;
            let (ts, ls): (Vec<T>, Vec<T>) = self
                .stencil(start, len, |j| self.crossing_time(j, x))
                .into_iter()
                .zip(start..start + len)
                .filter_map(|(v, j)| Some((v?, self.mid_lambda(j).ln())))
                .unzip();
            if ts.len() < 5 {
                continue;
            }
            if let Some(v) = cubic_lsq(&ts, &ls, t) {
                return Some(v.exp());
            }
        }
        None
    }

    pub fn h0(&self, x: [T; 2]) -> Option<T> {
        self.h_at(x, T::zero())
    }

    /// `∂_λ G_λ(0)` by a cubic through the nearest four midpoints.
    pub fn green_slope_at_origin(&self, lambda: T) -> Option<T> {
        let m = self.ray.lambdas().len() - 1;
        if m < 5 {
            return None;
        }
        let nearest = (0..m)
            .min_by(|&a, &b| {
                (self.mid_lambda(a) - lambda)
                    .abs()
                    .partial_cmp(&(self.mid_lambda(b) - lambda).abs())
                    .unwrap()
            })
            .unwrap();
        let start = nearest.saturating_sub(1).min(m - 4);
        let js = [start, start + 1, start + 2, start + 3];
        let gs = self.stencil(start, 4, |j| self.green_at_origin(j));
        let gs = [gs[0]?, gs[1]?, gs[2]?, gs[3]?];
        Some(lagrange4_slope(&js.map(|j| self.mid_lambda(j)), &gs, lambda))
    }
}
