use super::{finish, Backend, EnvelopeResult};
use crate::error::{Error, Result};
use crate::grid::{CoordinateStyle, GridSpec, ScalarField};
use crate::potential::{Potential, ReinhardtProfile, Symmetry};
use crate::scalar::Real;

/// Log-coordinate samples per axis.
const T_SAMPLES: usize = 128;
/// Dual slope samples per axis.
const P_SAMPLES: usize = 64;
/// Lower cut-off of each `t_j`; below it every obstacle is slack.
const T_FLOOR: f64 = -12.0;
/// Reported coincidence tolerance for this backend.
const REINHARDT_TOL: f64 = 1e-3;

/// Largest convex minorant, nondecreasing in each `t_j`, of
/// `g(t) = chi(t) - λ ln(e^{t1} + e^{t2})` on `{e^{t1} + e^{t2} < R^2}`,
/// tabulated on a square `t`-grid.
struct ConvexTable<T: Real> {
    lo: T,
    step: T,
    values: Vec<T>,
}

impl<T: Real> ConvexTable<T> {
    fn build(prof: &ReinhardtProfile<T>, lambda: T, radius: T) -> Self {
        let lo = T::lit(T_FLOOR);
        let hi = (radius * radius).ln();
        let n = T_SAMPLES;
        let step = (hi - lo) / T::from_usize_lossy(n - 1);
        let tc = |i: usize| lo + step * T::from_usize_lossy(i);
        let obstacle = |t: [T; 2]| {
            prof.value(&t) - lambda * (t[0].exp() + t[1].exp()).ln()
        };
        let r2 = radius * radius;
        let mut samples = Vec::new();
        let mut pmax = T::zero();
        for j in 0..n {
            for i in 0..n {
                let t = [tc(i), tc(j)];
                let s = t[0].exp() + t[1].exp();
                if s >= r2 {
                    continue;
                }
                let g = obstacle(t);
                for (axis, &tj) in t.iter().enumerate() {
                    let slope = prof.slope(&t, axis) - lambda * tj.exp() / s;
                    pmax = pmax.max(slope);
                }
                samples.push((t, g));
            }
        }
        let pmax = pmax * T::lit(1.05) + T::epsilon();
        let m = P_SAMPLES;
        let pc = |k: usize| pmax * T::from_usize_lossy(k) / T::from_usize_lossy(m - 1);
        let mut duals = Vec::with_capacity(m * m);
        for b in 0..m {
            for a in 0..m {
                let p = [pc(a), pc(b)];
                let conj = samples
                    .iter()
                    .map(|&(t, g)| p[0] * t[0] + p[1] * t[1] - g)
                    .fold(T::neg_infinity(), T::max);
                duals.push((p, conj));
            }
        }
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let t = [tc(i), tc(j)];
                let v = duals
                    .iter()
                    .map(|&(p, c)| p[0] * t[0] + p[1] * t[1] - c)
                    .fold(T::neg_infinity(), T::max);
                values.push(v);
            }
        }
        Self { lo, step, values }
    }

    fn eval(&self, t: [T; 2]) -> T {
        let n = T_SAMPLES;
        let mut idx = [0usize; 2];
        let mut frac = [T::zero(); 2];
        for a in 0..2 {
            let x = ((t[a].max(self.lo) - self.lo) / self.step)
                .min(T::from_usize_lossy(n - 1));
            let i = x.floor().to_f64_lossy() as usize;
            let i = i.min(n - 2);
            idx[a] = i;
            frac[a] = x - T::from_usize_lossy(i);
        }
        let at = |i: usize, j: usize| self.values[j * n + i];
        let (fx, fy) = (frac[0], frac[1]);
        let one = T::one();
        (one - fx) * (one - fy) * at(idx[0], idx[1])
            + fx * (one - fy) * at(idx[0] + 1, idx[1])
            + (one - fx) * fy * at(idx[0], idx[1] + 1)
            + fx * fy * at(idx[0] + 1, idx[1] + 1)
    }
}

/// Envelope of a Reinhardt potential in `C^2` through the discrete Legendre
/// biconjugate in log coordinates, sampled on an `n = 2` grid.
pub fn reinhardt_envelope<T: Real>(
    p: &Potential<T>,
    lambda: T,
    grid: &GridSpec<T>,
) -> Result<EnvelopeResult<T>> {
    if p.symmetry() == Symmetry::General || p.dim() != 2 {
        return Err(Error::NoSymmetry(format!(
            "reinhardt_envelope needs a Reinhardt potential in C^2, got {} in C^{}",
            p.symmetry(),
            p.dim()
        )));
    }
    if grid.dim() != 2 || grid.style() != CoordinateStyle::Cartesian {
        return Err(Error::GridMismatch("reinhardt_envelope samples on an n = 2 Cartesian grid".into()));
    }
    if !(lambda >= T::zero()) {
        return Err(Error::Hypothesis(format!("lambda = {lambda} must be >= 0")));
    }
    let prof = p.reinhardt_profile().expect("tagged potentials have a profile");
    let table = ConvexTable::build(&prof, lambda, grid.radius());
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
            let x = grid.coords(i);
            let t = [
                (x[0] * x[0] + x[1] * x[1]).ln(),
                (x[2] * x[2] + x[3] * x[3]).ln(),
            ];
            let v = table.eval(t);
            let l = pole.value(i);
            if l == T::neg_infinity() {
                if lambda > T::zero() {
                    v
                } else {
                    v.min(phi.value(i))
                }
            } else {
                v.min(phi.value(i) - lambda * l)
            }
        })
        .collect();
    let envelope = ScalarField::new(*grid, env_vals, dom)?;
    finish(
        lambda,
        Backend::Reinhardt,
        T::zero(),
        T::lit(REINHARDT_TOL),
        phi,
        pole,
        envelope,
        (0, T::zero()),
        None,
    )
}
