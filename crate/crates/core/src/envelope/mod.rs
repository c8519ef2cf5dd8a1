//! Envelopes `ψ_λ = sup{ψ psh : ψ <= φ - λ ln|z|^2}` and their equilibrium sets.

mod grid_solver;
mod radial;
mod reinhardt;

pub use grid_solver::{grid_envelope, grid_envelope_with_kernel, LogKernel};
pub use radial::{radial_envelope, RadialProfile};
pub use reinhardt::reinhardt_envelope;

use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{read_csv, write_csv, CoordinateStyle, GridSpec, ScalarField};
use crate::polyline::{level_loop, level_loops, Crossing, Polyline};
use crate::potential::{Potential, Symmetry};
use crate::scalar::Real;

/// Factor between the solver tolerance and the default coincidence tolerance.
pub const COINCIDENCE_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Radial,
    Reinhardt,
    Grid,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Radial => "radial",
            Backend::Reinhardt => "reinhardt",
            Backend::Grid => "grid",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(Backend::Radial),
            "reinhardt" => Ok(Backend::Reinhardt),
            "grid" => Ok(Backend::Grid),
            other => Err(Error::Parse {
                line: 0,
                msg: format!("unknown backend {other:?}"),
            }),
        }
    }
}

/// One envelope `ψ_λ` sampled on a grid, with its normalized potential
/// `a_λ = ψ_λ + λ·pole - φ`.
#[derive(Clone, Debug)]
pub struct EnvelopeResult<T: Real> {
    pub lambda: T,
    pub backend: Backend,
    /// Solver tolerance (zero for the closed-form backends).
    pub tol: T,
    /// Nodes with `a_λ >= -coincidence_tol` form `S_λ`.
    pub coincidence_tol: T,
    pub iterations: usize,
    pub residual: T,
    /// Set when `S_λ` has no node inside the boundary layer.
    pub degenerate: bool,
    pub phi: ScalarField<T>,
    /// Logarithmic kernel standing in for `ln|z|^2`; `-inf` marks the pole.
    pub pole: ScalarField<T>,
    pub envelope: ScalarField<T>,
    pub normalized: ScalarField<T>,
    pub coincidence: Vec<bool>,
    pub boundary: Polyline<T>,
    pub(crate) profile: Option<RadialProfile<T>>,
}

impl<T: Real> EnvelopeResult<T> {
    pub fn grid(&self) -> &GridSpec<T> {
        self.envelope.grid()
    }

    /// Closed-form radial profile, when the radial backend produced this result.
    pub fn radial_profile(&self) -> Option<&RadialProfile<T>> {
        self.profile.as_ref()
    }

    /// `φ - λ·pole`, with `+inf` at the pole when `λ > 0`.
    pub fn obstacle(&self) -> ScalarField<T> {
        obstacle_field(&self.phi, &self.pole, self.lambda)
    }

    /// Nodes of `B_λ = S_λ^c` inside the domain.
    pub fn complement(&self) -> Vec<bool> {
        let mask = self.envelope.mask();
        (0..mask.len())
            .map(|i| mask[i] && !self.coincidence[i])
            .collect()
    }

    /// Index of the pole node, if the grid has one.
    pub fn origin(&self) -> Option<usize> {
        self.grid().origin()
    }
}

pub(crate) fn obstacle_field<T: Real>(
    phi: &ScalarField<T>,
    pole: &ScalarField<T>,
    lambda: T,
) -> ScalarField<T> {
    let values = phi
        .values()
        .iter()
        .zip(pole.values())
        .zip(phi.mask())
        .map(|((&f, &l), &m)| {
            if !m {
                T::nan()
            } else if l == T::neg_infinity() {
                if lambda > T::zero() {
                    T::infinity()
                } else {
                    f
                }
            } else {
                f - lambda * l
            }
        })
        .collect();
    ScalarField::with_sentinels(*phi.grid(), values, phi.mask().to_vec())
        .expect("shapes agree by construction")
}

/// Checks the symmetry tag and dispatches to the closed-form backend.
pub fn symmetric_envelope<T: Real>(
    p: &Potential<T>,
    lambda: T,
    grid: &GridSpec<T>,
) -> Result<EnvelopeResult<T>> {
    match (p.symmetry(), p.dim()) {
        (Symmetry::Radial, 1) => radial_envelope(p, lambda, grid),
        (Symmetry::Radial, _) | (Symmetry::Reinhardt, _) => reinhardt_envelope(p, lambda, grid),
        _ => Err(Error::NoSymmetry(format!(
            "potential has {} symmetry",
            p.symmetry()
        ))),
    }
}

/// Coincidence mask `{a_λ >= -tol}` and the boundary of its complement.
pub fn extract_equilibrium<T: Real>(
    e: &EnvelopeResult<T>,
    tol: T,
) -> Result<(Vec<bool>, Polyline<T>)> {
    let a = &e.normalized;
    let dom = a.mask();
    let mask: Vec<bool> = (0..dom.len())
        .map(|i| dom[i] && a.value(i) >= -tol)
        .collect();
    let g = *a.grid();
    if g.dim() != 1 || g.style() != CoordinateStyle::Cartesian {
        return Ok((mask, Polyline::empty()));
    }
    if !mask.iter().zip(dom).any(|(&s, &d)| d && !s) {
        return Ok((mask, Polyline::empty()));
    }
    let level = free_boundary_level(e, tol);
    let poly = level_loop(&g, &level, dom, Crossing::SquareRoot, [T::zero(), T::zero()])?;
    Ok((mask, poly))
}

/// Positive inside `B_λ`, vanishing quadratically at its edge.
fn free_boundary_level<T: Real>(e: &EnvelopeResult<T>, tol: T) -> Vec<T> {
    let a = &e.normalized;
    let dom = a.mask();
    (0..dom.len())
        .map(|i| {
            let v = a.value(i);
            if !dom[i] {
                T::zero()
            } else if v == T::neg_infinity() {
                T::max_value()
            } else {
                -v - tol
            }
        })
        .collect()
}

/// Whether a slice is inside the range where the structure results are
/// asserted: `∂S_λ` is a single simple closed curve more than one cell from
/// `∂B`, and the Lelong slope at the origin reaches `λ - lelong_tol`. Grids
/// other than `n = 1` Cartesian have no curve and are judged by the slope.
pub fn slice_certified<T: Real>(e: &EnvelopeResult<T>, lelong_tol: T) -> Result<bool> {
    if !(e.lambda > T::zero()) || !lelong_check(e, lelong_tol)?.pass {
        return Ok(false);
    }
    let g = *e.grid();
    if g.dim() != 1 || g.style() != CoordinateStyle::Cartesian {
        return Ok(true);
    }
    let level = free_boundary_level(e, e.coincidence_tol);
    let loops = level_loops(&g, &level, e.normalized.mask(), Crossing::SquareRoot)?;
    let [curve] = loops.as_slice() else {
        return Ok(false);
    };
    let limit = g.radius() - g.spacing();
    let interior = curve
        .points
        .iter()
        .all(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() < limit);
    Ok(interior && curve.is_simple() && curve.encloses([T::zero(), T::zero()]))
}

/// Lelong number estimate of `a_λ` at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LelongReport<T: Real> {
    pub slope: T,
    pub intercept: T,
    pub samples: usize,
    pub pass: bool,
}

/// Fits `a_λ + φ ≈ s·pole + const` over the nodes with `0 < |z| <= rings·h`.
pub fn lelong_check<T: Real>(e: &EnvelopeResult<T>, tol: T) -> Result<LelongReport<T>> {
    lelong_check_rings(e, tol, 4)
}

pub fn lelong_check_rings<T: Real>(
    e: &EnvelopeResult<T>,
    tol: T,
    rings: usize,
) -> Result<LelongReport<T>> {
    let g = e.grid();
    let h = g.spacing();
    let r2 = (h * T::from_usize_lossy(rings)).powi(2);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..g.len() {
        let s = g.norm_sq(i);
        let l = e.pole.value(i);
        if !e.envelope.mask()[i] || s <= T::zero() || s > r2 || !l.is_finite() {
            continue;
        }
        xs.push(l);
        ys.push(e.normalized.value(i) + e.phi.value(i));
    }
    let distinct = {
        let mut r: Vec<T> = xs.clone();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * (T::one() + b.abs()));
        r.len()
    };
    if distinct < 2 {
        return Err(Error::AnnulusTooThin(format!(
            "{distinct} distinct radii within {rings} nodes of the pole"
        )));
    }
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    Ok(LelongReport {
        slope,
        intercept: my - slope * mx,
        samples: xs.len(),
        pass: slope >= e.lambda - tol,
    })
}

/// Largest `|Δ_h ψ_λ|` over nodes whose stencil lies in `B_λ`, skipping the
/// pole and its four neighbours.
pub fn maximality_residual<T: Real>(e: &EnvelopeResult<T>) -> Result<T> {
    harmonic_residual(&e.envelope, &e.complement())
}

/// Largest change made by one further plain Jacobi sweep of a grid envelope.
pub fn fixed_point_defect<T: Real>(e: &EnvelopeResult<T>) -> Result<T> {
    let next = grid_solver::jacobi_sweep(e)?;
    Ok(next
        .iter()
        .zip(e.envelope.values())
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
}

pub(crate) fn harmonic_residual<T: Real>(v: &ScalarField<T>, region: &[bool]) -> Result<T> {
    let g = *v.grid();
    if g.dim() != 1 || g.style() != CoordinateStyle::Cartesian {
        return Err(Error::Unsupported("harmonicity residual needs n = 1".into()));
    }
    let interior = g.interior_of(region);
    let res = g.resolution();
    let origin = g.origin();
    let near_origin = |i: usize| {
        origin.is_some_and(|o| i == o || i + 1 == o || o + 1 == i || i + res == o || o + res == i)
    };
    let h2 = g.spacing() * g.spacing();
    let mut worst = T::zero();
    for i in 0..g.len() {
        if !interior[i] || !v.mask()[i] || near_origin(i) {
            continue;
        }
        let vals = v.values();
        let lap = (vals[i - 1] + vals[i + 1] + vals[i - res] + vals[i + res]
            - T::lit(4.0) * vals[i])
            / h2;
        worst = worst.max(lap.abs());
    }
    Ok(worst)
}

/// Writes fields, boundary and metadata into `dir`.
pub fn write_envelope_dir<T: Real>(e: &EnvelopeResult<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let put = |name: &str, f: &ScalarField<T>| -> Result<()> {
        write_csv(f, BufWriter::new(fs::File::create(dir.join(name))?))
    };
    put("phi.csv", &e.phi)?;
    put("pole.csv", &e.pole)?;
    put("envelope.csv", &e.envelope)?;
    put("normalized.csv", &e.normalized)?;
    let s = ScalarField::with_sentinels(
        *e.grid(),
        e.coincidence.iter().map(|&b| if b { T::one() } else { T::zero() }).collect(),
        e.envelope.mask().to_vec(),
    )?;
    put("coincidence.csv", &s)?;
    e.boundary
        .write_csv(BufWriter::new(fs::File::create(dir.join("boundary.csv"))?))?;
    let meta = format!(
        "lambda = {}\nbackend = {}\ntol = {:e}\ncoincidence_tol = {:e}\niterations = {}\nresidual = {:e}\ndegenerate = {}\n",
        e.lambda.to_f64_lossy(),
        e.backend,
        e.tol.to_f64_lossy(),
        e.coincidence_tol.to_f64_lossy(),
        e.iterations,
        e.residual.to_f64_lossy(),
        e.degenerate
    );
    fs::write(dir.join("meta.txt"), meta)?;
    Ok(())
}

pub(crate) fn read_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: k + 1,
            msg: format!("expected key = value, found {line:?}"),
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Reads a directory written by [`write_envelope_dir`].
pub fn read_envelope_dir<T: Real>(dir: &Path) -> Result<EnvelopeResult<T>> {
    let get = |name: &str| -> Result<ScalarField<T>> {
        read_csv(BufReader::new(fs::File::open(dir.join(name))?))
    };
    let meta = read_key_values(&fs::read_to_string(dir.join("meta.txt"))?)?;
    let find = |key: &str| -> Result<&str> {
        meta.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("meta.txt lacks {key}"),
            })
    };
    let num = |key: &str| -> Result<T> {
        find(key)?
            .parse::<f64>()
            .map(T::lit)
            .map_err(|_| Error::Parse {
                line: 0,
                msg: format!("bad number for {key}"),
            })
    };
    let coincidence = get("coincidence.csv")?;
    let coincidence = coincidence
        .values()
        .iter()
        .zip(coincidence.mask())
        .map(|(&v, &m)| m && v > T::lit(0.5))
        .collect();
    Ok(EnvelopeResult {
        lambda: num("lambda")?,
        backend: find("backend")?.parse()?,
        tol: num("tol")?,
        coincidence_tol: num("coincidence_tol")?,
        iterations: find("iterations")?.parse().map_err(|_| Error::Parse {
            line: 0,
            msg: "bad iterations".into(),
        })?,
        residual: num("residual")?,
        degenerate: find("degenerate")? == "true",
        phi: get("phi.csv")?,
        pole: get("pole.csv")?,
        envelope: get("envelope.csv")?,
        normalized: get("normalized.csv")?,
        coincidence,
        boundary: Polyline::read_csv(BufReader::new(fs::File::open(dir.join("boundary.csv"))?))?,
        profile: None,
    })
}

/// Assembles a result from sampled `φ`, pole and envelope.
pub(crate) fn finish<T: Real>(
    lambda: T,
    backend: Backend,
    tol: T,
    coincidence_tol: T,
    phi: ScalarField<T>,
    pole: ScalarField<T>,
    envelope: ScalarField<T>,
    stats: (usize, T),
    profile: Option<RadialProfile<T>>,
) -> Result<EnvelopeResult<T>> {
    let g = obstacle_field(&phi, &pole, lambda);
    let dom = phi.mask().to_vec();
    let values: Vec<T> = (0..dom.len())
        .map(|i| {
            if !dom[i] {
                T::nan()
            } else if g.value(i) == T::infinity() {
                T::neg_infinity()
            } else {
                envelope.value(i) - g.value(i)
            }
        })
        .collect();
    let normalized = ScalarField::with_sentinels(*phi.grid(), values, dom.clone())?;
    let mut e = EnvelopeResult {
        lambda,
        backend,
        tol,
        coincidence_tol,
        iterations: stats.0,
        residual: stats.1,
        degenerate: false,
        phi,
        pole,
        envelope,
        normalized,
        coincidence: Vec::new(),
        boundary: Polyline::empty(),
        profile,
    };
    let (mask, boundary) = extract_equilibrium(&e, coincidence_tol)?;
    let interior = e.phi.interior();
    e.degenerate = !mask.iter().zip(&interior).any(|(&s, &i)| s && i);
    e.coincidence = mask;
    e.boundary = boundary;
    Ok(e)
}
