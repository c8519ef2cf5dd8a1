//! Structured grids over disc/ball domains, central-difference stencils and
//! the three-term C² distance.
//!
//! Cartesian nodes sit at `-R + i h` on every real axis, `h = 2R / resolution`,
//! so for even resolutions the origin is a node and the masked-in nodes are
//! symmetric about it. The domain mask is `|z| < R`. Nodes whose full
//! 3^d neighbourhood is not masked in form a one-node boundary layer on which
//! no stencil is evaluated.

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stand-in for `-inf` in log-radial coordinates `t = ln|z|^2`.
pub const LOG_RADIAL_T_MIN: f64 = -40.0;

/// Smallest resolution for which the stencils are meaningful.
pub const MIN_RESOLUTION: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordinateStyle {
    Cartesian,
    LogRadial,
}

impl fmt::Display for CoordinateStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordinateStyle::Cartesian => f.write_str("cartesian"),
            CoordinateStyle::LogRadial => f.write_str("log-radial"),
        }
    }
}

impl FromStr for CoordinateStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" => Ok(CoordinateStyle::Cartesian),
            "log-radial" => Ok(CoordinateStyle::LogRadial),
            other => Err(Error::InvalidGrid(format!("unknown coordinate style {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T: Real> {
    dim: usize,
    resolution: usize,
    radius: T,
    style: CoordinateStyle,
    spacing: T,
}

/// Validated constructor for a grid over the ball of radius `radius` in `C^dim`.
pub fn build_grid<T: Real>(
    dim: usize,
    resolution: usize,
    radius: T,
    style: CoordinateStyle,
) -> Result<GridSpec<T>> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidGrid(format!(
            "resolution {resolution} below {MIN_RESOLUTION}"
        )));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidGrid(format!("dimension {dim} unsupported")));
    }
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::InvalidGrid(format!("radius {radius} must be positive")));
    }
    let spacing = T::lit(2.0) * radius / T::from_usize_lossy(resolution);
    Ok(GridSpec {
        dim,
        resolution,
        radius,
        style,
        spacing,
    })
}

impl<T: Real> GridSpec<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn style(&self) -> CoordinateStyle {
        self.style
    }

    /// Cartesian spacing `h = 2R / resolution`.
    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Number of real axes carrying nodes.
    pub fn axes(&self) -> usize {
        match self.style {
            CoordinateStyle::Cartesian => 2 * self.dim,
            CoordinateStyle::LogRadial => 1,
        }
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.resolution.pow(axis as u32)
    }

    /// Coordinate of index `i` along any Cartesian axis.
    pub fn axis_coord(&self, i: usize) -> T {
        -self.radius + T::from_usize_lossy(i) * self.spacing
    }

    /// Bounds of the log-radial variable `t = ln|z|^2`.
    pub fn t_range(&self) -> (T, T) {
        (T::lit(LOG_RADIAL_T_MIN), (self.radius * self.radius).ln())
    }

    pub fn t_step(&self) -> T {
        let (lo, hi) = self.t_range();
        (hi - lo) / T::from_usize_lossy(self.resolution - 1)
    }

    pub fn t_coord(&self, i: usize) -> T {
        let (lo, _) = self.t_range();
        lo + T::from_usize_lossy(i) * self.t_step()
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .enumerate()
            .map(|(a, &i)| i * self.stride(a))
            .sum()
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 4] {
        let mut out = [0; 4];
        for slot in out.iter_mut().take(self.axes()) {
            *slot = idx % self.resolution;
            idx /= self.resolution;
        }
        out
    }

    /// Real coordinates `(x1, y1, x2, y2)` of a Cartesian node (unused slots zero).
    pub fn coords(&self, idx: usize) -> [T; 4] {
        let m = self.multi_index(idx);
        let mut out = [T::zero(); 4];
        for a in 0..self.axes() {
            out[a] = self.axis_coord(m[a]);
        }
        out
    }

    pub fn norm_sq(&self, idx: usize) -> T {
        match self.style {
            CoordinateStyle::Cartesian => self.coords(idx).iter().map(|&c| c * c).sum(),
            CoordinateStyle::LogRadial => self.t_coord(idx).exp(),
        }
    }

    pub fn in_domain(&self, idx: usize) -> bool {
        match self.style {
            CoordinateStyle::Cartesian => self.norm_sq(idx) < self.radius * self.radius,
            CoordinateStyle::LogRadial => true,
        }
    }

    pub fn domain_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.in_domain(i)).collect()
    }

    /// Index of the origin node, when the origin is a node.
    pub fn origin(&self) -> Option<usize> {
        if self.style != CoordinateStyle::Cartesian || self.resolution % 2 != 0 {
            return None;
        }
        let c = self.resolution / 2;
        Some(self.index_of(&[c; 4][..self.axes()]))
    }

    /// Neighbour `offset` steps along `axis`, if it exists on the grid.
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> Option<usize> {
        let m = self.multi_index(idx);
        let j = m[axis] as isize + offset;
        if j < 0 || j >= self.resolution as isize {
            return None;
        }
        let s = self.stride(axis) as isize;
        Some((idx as isize + offset * s) as usize)
    }

    /// Node at the given per-axis offsets.
    pub fn shifted(&self, idx: usize, offsets: &[isize]) -> Option<usize> {
        let mut cur = idx;
        for (axis, &o) in offsets.iter().enumerate() {
            if o != 0 {
                cur = self.neighbor(cur, axis, o)?;
            }
        }
        Some(cur)
    }

    /// Nodes whose whole 3^d neighbourhood lies inside `mask`.
    pub fn interior_of(&self, mask: &[bool]) -> Vec<bool> {
        let d = self.axes();
        let offsets = neighbourhood_offsets(d);
        (0..self.len())
            .map(|idx| {
                mask[idx]
                    && offsets.iter().all(|o| {
                        self.shifted(idx, &o[..d]).map(|j| mask[j]).unwrap_or(false)
                    })
            })
            .collect()
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.resolution == other.resolution
            && self.radius == other.radius
            && self.style == other.style
    }

    pub fn header(&self) -> String {
        format!(
            "n={} resolution={} radius={} style={}",
            self.dim, self.resolution, self.radius, self.style
        )
    }
}

pub(crate) fn neighbourhood_offsets(d: usize) -> Vec<[isize; 4]> {
    let count = 3usize.pow(d as u32);
    (0..count)
        .map(|mut c| {
            let mut o = [0isize; 4];
            for slot in o.iter_mut().take(d) {
                *slot = (c % 3) as isize - 1;
                c /= 3;
            }
            o
        })
        .collect()
}

/// Values sampled on a grid, with an inside-domain flag per node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T: Real> {
    grid: GridSpec<T>,
    values: Vec<T>,
    mask: Vec<bool>,
}

impl<T: Real> ScalarField<T> {
    /// Builds a field, checking shapes and finiteness at masked-in nodes.
    pub fn new(grid: GridSpec<T>, values: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        let f = Self::with_sentinels(grid, values, mask)?;
        if let Some(node) = (0..f.values.len()).find(|&i| f.mask[i] && !f.values[i].is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(f)
    }

    /// Like [`ScalarField::new`] but allows infinite values (obstacle sentinels).
    pub fn with_sentinels(grid: GridSpec<T>, values: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} nodes, got {} values and {} mask flags",
                grid.len(),
                values.len(),
                mask.len()
            )));
        }
        Ok(Self { grid, values, mask })
    }

    /// Samples `f` on the domain nodes; masked-out nodes hold NaN.
    pub fn from_fn<F: Fn(&[T; 4]) -> T>(grid: GridSpec<T>, f: F) -> Result<Self> {
        let mask = grid.domain_mask();
        let values = (0..grid.len())
            .map(|i| {
                if mask[i] {
                    f(&grid.coords(i))
                } else {
                    T::nan()
                }
            })
            .collect();
        Self::new(grid, values, mask)
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn value(&self, idx: usize) -> T {
        self.values[idx]
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Nodes where stencils may be evaluated.
    pub fn interior(&self) -> Vec<bool> {
        self.grid.interior_of(&self.mask)
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { f(v) } else { T::nan() })
            .collect();
        Self {
            grid: self.grid,
            values,
            mask: self.mask.clone(),
        }
    }

    /// Pointwise combination on the intersection of both masks.
    pub fn zip_with<F: Fn(T, T) -> T>(&self, other: &Self, f: F) -> Result<Self> {
        check_same(self, other)?;
        let mask: Vec<bool> = self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && b).collect();
        let values = (0..self.values.len())
            .map(|i| {
                if mask[i] {
                    f(self.values[i], other.values[i])
                } else {
                    T::nan()
                }
            })
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
            mask,
        })
    }

    pub fn restrict(&self, mask: &[bool]) -> Self {
        let mask: Vec<bool> = self.mask.iter().zip(mask).map(|(&a, &b)| a && b).collect();
        let values = (0..self.values.len())
            .map(|i| if mask[i] { self.values[i] } else { T::nan() })
            .collect();
        Self {
            grid: self.grid,
            values,
            mask,
        }
    }

    pub fn first_partial(&self, idx: usize, axis: usize) -> T {
        let h = self.grid.spacing;
        let p = self.grid.neighbor(idx, axis, 1).expect("interior node");
        let m = self.grid.neighbor(idx, axis, -1).expect("interior node");
        (self.values[p] - self.values[m]) / (T::lit(2.0) * h)
    }

    pub fn second_partial(&self, idx: usize, a: usize, b: usize) -> T {
        let h = self.grid.spacing;
        let g = &self.grid;
        if a == b {
            let p = g.neighbor(idx, a, 1).expect("interior node");
            let m = g.neighbor(idx, a, -1).expect("interior node");
            (self.values[p] - T::lit(2.0) * self.values[idx] + self.values[m]) / (h * h)
        } else {
            let at = |sa: isize, sb: isize| {
                let mut o = [0isize; 4];
                o[a] = sa;
                o[b] = sb;
                self.values[g.shifted(idx, &o[..g.axes()]).expect("interior node")]
            };
            (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (T::lit(4.0) * h * h)
        }
    }

    /// Five-point (per complex plane) Laplacian `sum_a f_aa`.
    pub fn laplacian_at(&self, idx: usize) -> T {
        (0..self.grid.axes()).map(|a| self.second_partial(idx, a, a)).sum()
    }

    pub fn sup_abs(&self) -> T {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .fold(T::zero(), |acc, (&v, _)| acc.max(v.abs()))
    }
}

fn check_same<T: Real>(a: &ScalarField<T>, b: &ScalarField<T>) -> Result<()> {
    if !a.grid.same_layout(&b.grid) {
        return Err(Error::GridMismatch(format!(
            "{} vs {}",
            a.grid.header(),
            b.grid.header()
        )));
    }
    Ok(())
}

/// Output of [`ddc_component`].
#[derive(Clone, Debug)]
pub enum Ddc<T: Real> {
    /// `n = 1`: density of `dd^c f` against Lebesgue measure, `Δf / 4π`.
    Density(ScalarField<T>),
    /// `n = 2`: complex Hessian `∂²f/∂z_j∂z̄_k` as `h11, h22, Re h12, Im h12`.
    Hessian([ScalarField<T>; 4]),
}

/// Complex Hessian `∂²f/∂z_j∂z̄_k` of a field at an interior node (`j, k < n`).
pub fn complex_hessian_at<T: Real>(f: &ScalarField<T>, idx: usize, j: usize, k: usize) -> (T, T) {
    let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
    let quarter = T::lit(0.25);
    let re = quarter * (f.second_partial(idx, xj, xk) + f.second_partial(idx, yj, yk));
    let im = quarter * (f.second_partial(idx, xj, yk) - f.second_partial(idx, yj, xk));
    (re, im)
}

/// `dd^c f` with `dd^c = (i/2π)∂∂̄`, evaluated away from the boundary layer.
pub fn ddc_component<T: Real>(f: &ScalarField<T>) -> Result<Ddc<T>> {
    let g = *f.grid();
    if g.style() != CoordinateStyle::Cartesian {
        return Err(Error::Unsupported("stencils need a Cartesian grid".into()));
    }
    let interior = f.interior();
    let build = |comp: &dyn Fn(usize) -> T| -> ScalarField<T> {
        let values = (0..g.len())
            .map(|i| if interior[i] { comp(i) } else { T::nan() })
            .collect();
        ScalarField {
            grid: g,
            values,
            mask: interior.clone(),
        }
    };
    match g.dim() {
        1 => {
            let norm = T::one() / (T::lit(4.0) * T::PI());
            Ok(Ddc::Density(build(&|i| norm * f.laplacian_at(i))))
        }
        _ => Ok(Ddc::Hessian([
            build(&|i| complex_hessian_at(f, i, 0, 0).0),
            build(&|i| complex_hessian_at(f, i, 1, 1).0),
            build(&|i| complex_hessian_at(f, i, 0, 1).0),
            build(&|i| complex_hessian_at(f, i, 0, 1).1),
        ])),
    }
}

/// Sup of `|f - g|` plus sup of first partials plus sup of second partials,
/// all over the common interior.
pub fn c2_norm<T: Real>(f: &ScalarField<T>, g: &ScalarField<T>) -> Result<T> {
    c2_norm_on(f, g, None)
}

/// [`c2_norm`] restricted to the interior nodes also flagged in `region`.
pub fn c2_norm_on<T: Real>(
    f: &ScalarField<T>,
    g: &ScalarField<T>,
    region: Option<&[bool]>,
) -> Result<T> {
    let d = f.zip_with(g, |a, b| a - b)?;
    let interior = d.interior();
    let axes = d.grid().axes();
    let (mut s0, mut s1, mut s2) = (T::zero(), T::zero(), T::zero());
    for i in 0..interior.len() {
        if !interior[i] || region.map(|r| !r[i]).unwrap_or(false) {
            continue;
        }
        s0 = s0.max(d.values[i].abs());
        for a in 0..axes {
            s1 = s1.max(d.first_partial(i, a).abs());
            for b in a..axes {
                s2 = s2.max(d.second_partial(i, a, b).abs());
            }
        }
    }
    Ok(s0 + s1 + s2)
}

/// Sup over the interior of the largest first partial of `f - g`.
pub fn c1_gradient_sup<T: Real>(
    f: &ScalarField<T>,
    g: &ScalarField<T>,
    region: Option<&[bool]>,
) -> Result<T> {
    let d = f.zip_with(g, |a, b| a - b)?;
    let interior = d.interior();
    let mut s = T::zero();
    for i in 0..interior.len() {
        if interior[i] && region.map(|r| r[i]).unwrap_or(true) {
            for a in 0..d.grid().axes() {
                s = s.max(d.first_partial(i, a).abs());
            }
        }
    }
    Ok(s)
}

const CSV_TAG: &str = "# pshlab-field";
const BIN_MAGIC: &[u8; 4] = b"PSHF";

/// Writes the header line then one row per fastest-axis line; NaN marks masked-out nodes.
pub fn write_csv<T: Real, W: Write>(field: &ScalarField<T>, mut out: W) -> Result<()> {
    let g = field.grid();
    writeln!(out, "{} {}", CSV_TAG, g.header())?;
    let res = g.resolution();
    for row in field.values.chunks(res).zip(field.mask.chunks(res)) {
        let line: Vec<String> = row
            .0
            .iter()
            .zip(row.1)
            .map(|(&v, &m)| if m { format!("{:e}", v.to_f64_lossy()) } else { "NaN".into() })
            .collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn parse_header<T: Real>(line: &str) -> Result<GridSpec<T>> {
    let rest = line
        .strip_prefix(CSV_TAG)
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing field header".into() })?;
    let mut n = None;
    let mut res = None;
    let mut radius = None;
    let mut style = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("bad header entry {kv:?}") })?;
        let bad = |_| Error::Parse { line: 1, msg: format!("bad value for {k}") };
        match k {
            "n" => n = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "resolution" => res = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "radius" => radius = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "style" => style = Some(v.parse::<CoordinateStyle>()?),
            _ => return Err(Error::Parse { line: 1, msg: format!("unknown header key {k}") }),
        }
    }
    match (n, res, radius, style) {
        (Some(n), Some(res), Some(r), Some(s)) => build_grid(n, res, T::lit(r), s),
        _ => Err(Error::Parse { line: 1, msg: "incomplete header".into() }),
    }
}

pub fn read_csv<T: Real, R: BufRead>(input: R) -> Result<ScalarField<T>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty input".into() })??;
    let grid: GridSpec<T> = parse_header(&header)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut mask = Vec::with_capacity(grid.len());
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
                line: ln + 2,
                msg: format!("bad number {tok:?}"),
            })?;
            mask.push(!v.is_nan());
            values.push(T::lit(v));
        }
    }
    ScalarField::with_sentinels(grid, values, mask)
}

pub fn write_binary<T: Real, W: Write>(field: &ScalarField<T>, mut out: W) -> Result<()> {
    let g = field.grid();
    out.write_all(BIN_MAGIC)?;
    out.write_all(&(g.dim() as u32).to_le_bytes())?;
    out.write_all(&(g.resolution() as u32).to_le_bytes())?;
    out.write_all(&g.radius().to_f64_lossy().to_le_bytes())?;
    out.write_all(&[match g.style() {
        CoordinateStyle::Cartesian => 0u8,
        CoordinateStyle::LogRadial => 1u8,
    }])?;
    for (&v, &m) in field.values.iter().zip(&field.mask) {
        let x = if m { v.to_f64_lossy() } else { f64::NAN };
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<T: Real, R: Read>(mut input: R) -> Result<ScalarField<T>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != BIN_MAGIC {
        return Err(Error::Parse { line: 0, msg: "bad magic".into() });
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b4)?;
    let res = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b8)?;
    let radius = f64::from_le_bytes(b8);
    let mut b1 = [0u8; 1];
    input.read_exact(&mut b1)?;
    let style = if b1[0] == 0 {
        CoordinateStyle::Cartesian
    } else {
        CoordinateStyle::LogRadial
    };
    let grid = build_grid(n, res, T::lit(radius), style)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut mask = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        input.read_exact(&mut b8)?;
        let v = f64::from_le_bytes(b8);
        mask.push(!v.is_nan());
        values.push(T::lit(v));
    }
    ScalarField::with_sentinels(grid, values, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(res: usize) -> GridSpec<f64> {
        build_grid(1, res, 1.0, CoordinateStyle::Cartesian).unwrap()
    }

    #[test]
    fn build_grid_examples() {
        let g = disc(256);
        assert_eq!(g.len(), 256 * 256);
        assert_eq!(g.spacing(), 2.0 / 256.0);
        let lr = build_grid(1, 128, 2.0f64, CoordinateStyle::LogRadial).unwrap();
        assert_eq!(lr.len(), 128);
        assert_eq!(lr.t_coord(0), LOG_RADIAL_T_MIN);
        assert!((lr.t_coord(127) - 4f64.ln()).abs() < 1e-12);
        assert!(build_grid(2, 15, 1.0f64, CoordinateStyle::Cartesian).is_err());
        assert!(build_grid(3, 32, 1.0f64, CoordinateStyle::Cartesian).is_err());
        assert!(build_grid(1, 32, 0.0f64, CoordinateStyle::Cartesian).is_err());
    }

    #[test]
    fn origin_is_a_node() {
        let g = disc(64);
        let o = g.origin().unwrap();
        assert_eq!(g.norm_sq(o), 0.0);
    }

    #[test]
    fn ddc_of_norm_sq_is_constant() {
        let f = ScalarField::from_fn(disc(64), |c| c[0] * c[0] + c[1] * c[1]).unwrap();
        let Ddc::Density(d) = ddc_component(&f).unwrap() else { panic!() };
        let target = 1.0 / std::f64::consts::PI;
        for (i, &m) in d.mask().iter().enumerate() {
            if m {
                assert!((d.value(i) - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ddc_of_pluriharmonic_vanishes() {
        let f = ScalarField::from_fn(disc(64), |c| c[0] * c[0] - c[1] * c[1]).unwrap();
        let Ddc::Density(d) = ddc_component(&f).unwrap() else { panic!() };
        assert!(d.sup_abs() < 1e-10);
    }

    #[test]
    fn ddc_of_quartic_is_second_order() {
        // |z|^4: density 4|z|^2/π, 5-point error is exactly h^2 * 8/(12π)... bounded by C h^2
        let mut errs = vec![];
        for res in [64, 128] {
            let g = disc(res);
            let f = ScalarField::from_fn(g, |c| (c[0] * c[0] + c[1] * c[1]).powi(2)).unwrap();
            let Ddc::Density(d) = ddc_component(&f).unwrap() else { panic!() };
            let mut e: f64 = 0.0;
            for (i, &m) in d.mask().iter().enumerate() {
                if m {
                    let s = g.norm_sq(i);
                    e = e.max((d.value(i) - 4.0 * s / std::f64::consts::PI).abs());
                }
            }
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn ddc_n2_hessian_of_norm_sq() {
        let g = build_grid(2, 16, 1.0f64, CoordinateStyle::Cartesian).unwrap();
        let f = ScalarField::from_fn(g, |c| c.iter().map(|x| x * x).sum()).unwrap();
        let Ddc::Hessian([h11, h22, r12, i12]) = ddc_component(&f).unwrap() else { panic!() };
        let o = g.origin().unwrap();
        assert!((h11.value(o) - 1.0).abs() < 1e-12);
        assert!((h22.value(o) - 1.0).abs() < 1e-12);
        assert!(r12.value(o).abs() < 1e-12 && i12.value(o).abs() < 1e-12);
    }

    #[test]
    fn c2_norm_examples() {
        let g = disc(128);
        let f = ScalarField::from_fn(g, |c| c[0] * c[0] + c[1] * c[1]).unwrap();
        assert_eq!(c2_norm(&f, &f).unwrap(), 0.0);
        let f3 = f.map(|v| v + 3.0);
        assert!((c2_norm(&f3, &f).unwrap() - 3.0).abs() < 1e-12);
        let a = 0.01;
        let fa = f.map(|v| (1.0 + a) * v);
        let n = c2_norm(&fa, &f).unwrap();
        // zeroth a, gradient 2a, second 2a at the edge of the interior
        let h = g.spacing();
        assert!(n <= 5.0 * a + 1e-12 && n >= 5.0 * a - 10.0 * a * h, "{n}");
    }

    #[test]
    fn grid_mismatch_is_error() {
        let f = ScalarField::from_fn(disc(32), |_| 0.0).unwrap();
        let g = ScalarField::from_fn(disc(64), |_| 0.0).unwrap();
        assert!(matches!(c2_norm(&f, &g), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn f32_stencils_work() {
        let g = build_grid(1, 32, 1.0f32, CoordinateStyle::Cartesian).unwrap();
        let f = ScalarField::from_fn(g, |c| c[0] * c[0] + c[1] * c[1]).unwrap();
        let Ddc::Density(d) = ddc_component(&f).unwrap() else { panic!() };
        let o = g.origin().unwrap();
        assert!((d.value(o) - 1.0 / std::f32::consts::PI).abs() < 1e-4);
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let f = ScalarField::from_fn(disc(16), |c| c[0] - 2.0 * c[1]).unwrap();
        let mut buf = vec![];
        write_csv(&f, &mut buf).unwrap();
        let back: ScalarField<f64> = read_csv(&buf[..]).unwrap();
        assert_eq!(back.mask(), f.mask());
        let mut bin = vec![];
        write_binary(&f, &mut bin).unwrap();
        let back2: ScalarField<f64> = read_binary(&bin[..]).unwrap();
        for i in 0..f.values().len() {
            if f.mask()[i] {
                assert_eq!(back2.value(i), f.value(i));
                assert!((back.value(i) - f.value(i)).abs() < 1e-12);
            }
        }
    }
}
