use super::{finish, Backend, EnvelopeResult, COINCIDENCE_FACTOR};
use crate::error::{Error, Result};
use crate::grid::{CoordinateStyle, GridSpec, ScalarField};
use crate::potential::{validate_strict_psh, Potential};
use crate::scalar::Real;

/// Sweeps between two residual evaluations.
const CHECK_EVERY: usize = 8;
/// Convergence target for the kernel solve.
const KERNEL_TOL: f64 = 1e-13;

/// Interior nodes of an `n = 1` grid split by checkerboard colour.
struct Stencil {
    res: usize,
    red: Vec<usize>,
    black: Vec<usize>,
    origin: usize,
}

impl Stencil {
    fn new<T: Real>(grid: &GridSpec<T>) -> Result<Self> {
        if grid.dim() != 1 || grid.style() != CoordinateStyle::Cartesian {
            return Err(Error::Unsupported("grid envelopes need an n = 1 Cartesian grid".into()));
        }
        let origin = grid.origin().ok_or_else(|| {
            Error::InvalidGrid("grid envelopes need an even resolution so 0 is a node".into())
        })?;
        let res = grid.resolution();
        let interior = grid.interior_of(&grid.domain_mask());
        let (mut red, mut black) = (Vec::new(), Vec::new());
        for (i, &inside) in interior.iter().enumerate() {
            if inside {
                if (i % res + i / res) % 2 == 0 {
                    red.push(i);
                } else {
                    black.push(i);
                }
            }
        }
        Ok(Self {
            res,
            red,
            black,
            origin,
        })
    }

    #[inline]
    fn mean<T: Real>(&self, v: &[T], i: usize) -> T {
        T::lit(0.25) * (v[i - 1] + v[i + 1] + v[i - self.res] + v[i + self.res])
    }

    fn omega<T: Real>(&self) -> T {
        let s = (T::PI() / T::from_usize_lossy(self.res)).sin();
        T::lit(2.0) / (T::one() + s)
    }
}

/// Discrete logarithmic kernel: `ln|z|^2` on the boundary layer, discretely
/// harmonic inside except at 0 where its five-point Laplacian is `4π/h^2`.
/// Subtracting multiples of it keeps the discrete comparison principle exact.
#[derive(Clone, Debug)]
pub struct LogKernel<T: Real> {
    grid: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Real> LogKernel<T> {
    pub fn new(grid: &GridSpec<T>) -> Result<Self> {
        let st = Stencil::new(grid)?;
        let dom = grid.domain_mask();
        let mut v: Vec<T> = (0..grid.len())
            .map(|i| if dom[i] { grid.norm_sq(i).ln() } else { T::nan() })
            .collect();
        let pi = T::PI();
        let o = st.origin;
        v[o] = T::lit(0.25) * (v[o - 1] + v[o + 1] + v[o - st.res] + v[o + st.res]) - pi;
        let omega = st.omega::<T>();
        // f32 stalls near 16 ulp of the kernel's magnitude
        let tol = T::lit(KERNEL_TOL).max(T::lit(64.0) * T::epsilon());
        let max_sweeps = 200 * grid.resolution() + 1000;
        let mut sweeps = 0;
        loop {
            for set in [&st.red, &st.black] {
                for &i in set.iter() {
                    let target = st.mean(&v, i) - if i == o { pi } else { T::zero() };
                    let cur = v[i];
                    v[i] = cur + omega * (target - cur);
                }
            }
            sweeps += 1;
            if sweeps % CHECK_EVERY == 0 {
                let r = st
                    .red
                    .iter()
                    .chain(&st.black)
                    .map(|&i| {
                        let target = st.mean(&v, i) - if i == o { pi } else { T::zero() };
                        (target - v[i]).abs()
                    })
                    .fold(T::zero(), T::max);
                if r < tol {
                    break;
                }
                if sweeps > max_sweeps {
                    return Err(Error::NotConverged {
                        iterations: sweeps,
                        residual: r.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(Self {
            grid: *grid,
            values: v,
        })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn field(&self) -> ScalarField<T> {
        ScalarField::new(self.grid, self.values.clone(), self.grid.domain_mask())
            .expect("kernel is finite on the domain")
    }
}

/// Envelope on an `n = 1` grid by red-black projected over-relaxation of
/// `v <- min(g, mean of four neighbours)`, started from the obstacle.
pub fn grid_envelope<T: Real>(
    p: &Potential<T>,
    lambda: T,
    grid: &GridSpec<T>,
    tol: T,
    max_iters: usize,
) -> Result<EnvelopeResult<T>> {
    let kernel = LogKernel::new(grid)?;
    grid_envelope_with_kernel(p, lambda, &kernel, tol, max_iters)
}

/// [`grid_envelope`] reusing a precomputed kernel.
pub fn grid_envelope_with_kernel<T: Real>(
    p: &Potential<T>,
    lambda: T,
    kernel: &LogKernel<T>,
    tol: T,
    max_iters: usize,
) -> Result<EnvelopeResult<T>> {
    let grid = kernel.grid();
    let st = Stencil::new(grid)?;
    if !(lambda >= T::zero()) {
        return Err(Error::Hypothesis(format!("lambda = {lambda} must be >= 0")));
    }
    if !(tol > T::zero()) {
        return Err(Error::Hypothesis(format!("tolerance {tol} must be positive")));
    }
    let cert = validate_strict_psh(p, grid)?;
    if !cert.is_valid() {
        return Err(Error::Hypothesis(format!(
            "potential is not strictly psh on the grid: min eigenvalue {} at ({}, {})",
            cert.min_eigenvalue, cert.location[0], cert.location[1]
        )));
    }
    let phi = p.sample(grid)?;
    let dom = phi.mask().to_vec();
    let o = st.origin;
    let unconstrained = lambda > T::zero();
    let mut g: Vec<T> = (0..grid.len())
        .map(|i| if dom[i] { phi.value(i) - lambda * kernel.values[i] } else { T::nan() })
        .collect();
    if unconstrained {
        g[o] = T::infinity();
    }
    let mut v = g.clone();
    if unconstrained {
        v[o] = st.mean(&g, o);
    }

    let omega = st.omega::<T>();
    let mut sweeps = 0;
    let mut residual;
    loop {
        for set in [&st.red, &st.black] {
            for &i in set.iter() {
                let relaxed = v[i] + omega * (st.mean(&v, i) - v[i]);
                v[i] = relaxed.min(g[i]);
            }
        }
        sweeps += 1;
        if sweeps % CHECK_EVERY == 0 || sweeps >= max_iters {
            residual = st
                .red
                .iter()
                .chain(&st.black)
                .map(|&i| (st.mean(&v, i).min(g[i]) - v[i]).abs())
                .fold(T::zero(), T::max);
            if residual < tol {
                break;
            }
            if sweeps >= max_iters {
                return Err(Error::NotConverged {
                    iterations: sweeps,
                    residual: residual.to_f64_lossy(),
                });
            }
        }
    }

    let mut pole_vals = kernel.values.clone();
    if unconstrained {
        pole_vals[o] = T::neg_infinity();
    }
    let pole = ScalarField::with_sentinels(*grid, pole_vals, dom.clone())?;
    let envelope = ScalarField::new(*grid, v, dom)?;
    finish(
        lambda,
        Backend::Grid,
        tol,
        tol * T::lit(COINCIDENCE_FACTOR),
        phi,
        pole,
        envelope,
        (sweeps, residual),
        None,
    )
}

/// One plain Jacobi sweep `v <- min(g, mean)` over interior nodes.
pub(crate) fn jacobi_sweep<T: Real>(e: &EnvelopeResult<T>) -> Result<Vec<T>> {
    let grid = e.grid();
    let st = Stencil::new(grid)?;
    let v = e.envelope.values();
    let g = e.obstacle();
    let mut out = v.to_vec();
    for &i in st.red.iter().chain(&st.black) {
        out[i] = st.mean(v, i).min(g.value(i));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::potential::builtin;

    #[test]
    fn kernel_matches_log_away_from_pole() {
        let g = build_grid(1, 64, 1.0f64, CoordinateStyle::Cartesian).unwrap();
        let k = LogKernel::new(&g).unwrap();
        for i in 0..g.len() {
            let s = g.norm_sq(i);
            if g.in_domain(i) && s > 0.09 {
                assert!((k.values()[i] - s.ln()).abs() < 5e-3, "node {i}");
            }
        }
    }

    #[test]
    fn converged_envelope_is_a_jacobi_fixed_point() {
        let g = build_grid(1, 48, 1.0f64, CoordinateStyle::Cartesian).unwrap();
        let p = builtin::<f64>("quartic").unwrap();
        let e = grid_envelope(&p, 0.3, &g, 1e-12, 100_000).unwrap();
        assert!(crate::envelope::fixed_point_defect(&e).unwrap() < 1e-10);
    }

    #[test]
    fn lambda_zero_returns_obstacle() {
        let g = build_grid(1, 32, 1.0f64, CoordinateStyle::Cartesian).unwrap();
        let p = builtin::<f64>("flat").unwrap();
        let e = grid_envelope(&p, 0.0, &g, 1e-12, 10_000).unwrap();
        for i in 0..g.len() {
            if g.in_domain(i) {
                assert_eq!(e.envelope.value(i), e.phi.value(i));
            }
        }
    }

    #[test]
    fn fixed_point() {
        let g = build_grid(1, 32, 1.0f64, CoordinateStyle::Cartesian).unwrap();
        let p = builtin::<f64>("flat").unwrap();
        let e = grid_envelope(&p, 0.25, &g, 1e-12, 100_000).unwrap();
        let next = jacobi_sweep(&e).unwrap();
        for i in 0..g.len() {
            if g.in_domain(i) {
                assert!((next[i] - e.envelope.value(i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_resolution_is_rejected() {
        let g = build_grid(1, 33, 1.0f64, CoordinateStyle::Cartesian).unwrap();
        let p = builtin::<f64>("flat").unwrap();
        assert!(matches!(grid_envelope(&p, 0.25, &g, 1e-10, 10), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn max_iters_error_reports_residual() {
        let g = build_grid(1, 32, 1.0f64, CoordinateStyle::Cartesian).unwrap();
        let p = builtin::<f64>("flat").unwrap();
        match grid_envelope(&p, 0.25, &g, 1e-14, 3) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
