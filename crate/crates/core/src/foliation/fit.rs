//! Local least-squares fits on `n = 1` Cartesian grids.

use crate::grid::GridSpec;
use crate::scalar::Real;

/// `c0 + c1 X + c2 Y + c3 (X^2 - Y^2) + c4 XY` in `X = (x - x0)/h`, `Y = (y - y0)/h`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct HarmonicQuad<T: Real> {
    centre: [T; 2],
    h: T,
    c: [T; 5],
}

impl<T: Real> HarmonicQuad<T> {
    fn local(&self, p: [T; 2]) -> (T, T) {
        ((p[0] - self.centre[0]) / self.h, (p[1] - self.centre[1]) / self.h)
    }

    pub fn value(&self, p: [T; 2]) -> T {
        let (x, y) = self.local(p);
        let c = &self.c;
        c[0] + c[1] * x + c[2] * y + c[3] * (x * x - y * y) + c[4] * x * y
    }

    pub fn gradient(&self, p: [T; 2]) -> [T; 2] {
        let (x, y) = self.local(p);
        let c = &self.c;
        let two = T::lit(2.0);
        [
            (c[1] + two * c[3] * x + c[4] * y) / self.h,
            (c[2] - two * c[3] * y + c[4] * x) / self.h,
        ]
    }
}

/// Index of the node nearest to `p`, if it lies on the grid.
pub(crate) fn nearest_node<T: Real>(grid: &GridSpec<T>, p: [T; 2]) -> Option<(usize, usize)> {
    let res = grid.resolution();
    let idx = |v: T| -> Option<usize> {
        let k = ((v + grid.radius()) / grid.spacing()).round();
        (k >= T::zero() && k < T::from_usize_lossy(res)).then(|| k.to_usize().unwrap())
    };
    Some((idx(p[0])?, idx(p[1])?))
}

/// True if some node within `band` cells (max-norm) of node `i` satisfies `hit`.
pub(crate) fn near<T: Real, F: Fn(usize) -> bool>(grid: &GridSpec<T>, i: usize, band: usize, hit: F) -> bool {
    let res = grid.resolution() as isize;
    let m = grid.multi_index(i);
    let band = band as isize;
    (-band..=band).any(|dj| {
        (-band..=band).any(|di| {
            let (x, y) = (m[0] as isize + di, m[1] as isize + dj);
            x >= 0 && y >= 0 && x < res && y < res && hit(grid.index_of(&[x as usize, y as usize]))
        })
    })
}

/// Fits a harmonic quadratic to `value` over valid nodes around `p`,
/// widening the window until enough nodes are found.
pub(crate) fn fit_harmonic<T, V, F>(grid: &GridSpec<T>, p: [T; 2], valid: V, value: F) -> Option<HarmonicQuad<T>>
where
    T: Real,
    V: Fn(usize) -> bool,
    F: Fn(usize) -> T,
{
    let (ci, cj) = nearest_node(grid, p)?;
    let res = grid.resolution() as isize;
    let h = grid.spacing();
    for radius in 2isize..=5 {
        let mut ata = [[T::zero(); 5]; 5];
        let mut atb = [T::zero(); 5];
        let mut count = 0;
        for dj in -radius..=radius {
            for di in -radius..=radius {
                let (i, j) = (ci as isize + di, cj as isize + dj);
                if i < 0 || j < 0 || i >= res || j >= res {
                    continue;
                }
                let node = grid.index_of(&[i as usize, j as usize]);
                if !valid(node) {
                    continue;
                }
                let c = grid.coords(node);
                let (x, y) = ((c[0] - p[0]) / h, (c[1] - p[1]) / h);
                let row = [T::one(), x, y, x * x - y * y, x * y];
                let v = value(node);
                for a in 0..5 {
                    atb[a] += row[a] * v;
                    for b in 0..5 {
                        ata[a][b] += row[a] * row[b];
                    }
                }
                count += 1;
            }
        }
        if count < 9 {
            continue;
        }
        if let Some(c) = solve(ata, atb) {
            return Some(HarmonicQuad { centre: p, h, c });
        }
    }
    None
}

/// Gaussian elimination with partial pivoting.
fn solve<T: Real, const N: usize>(mut a: [[T; N]; N], mut b: [T; N]) -> Option<[T; N]> {
    let scale = a.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
    for col in 0..N {
        let piv = (col..N).max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())?;
        if a[piv][col].abs() <= scale * T::lit(1e-12) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..N {
            let f = a[r][col] / a[col][col];
            for k in col..N {
                let sub = f * a[col][k];
                a[r][k] -= sub;
            }
            let sub = f * b[col];
            b[r] -= sub;
        }
    }
    let mut x = [T::zero(); N];
    for r in (0..N).rev() {
        let mut s = b[r];
        for k in r + 1..N {
            s -= a[r][k] * x[k];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Value at `x0` of the least-squares cubic through `(xs, ys)`.
pub(crate) fn cubic_lsq<T: Real>(xs: &[T], ys: &[T], x0: T) -> Option<T> {
    if xs.len() < 4 {
        return None;
    }
    let mut ata = [[T::zero(); 4]; 4];
    let mut atb = [T::zero(); 4];
    for (&x, &y) in xs.iter().zip(ys) {
        let d = x - x0;
        let row = [T::one(), d, d * d, d * d * d];
        for r in 0..4 {
            for c in 0..4 {
                ata[r][c] += row[r] * row[c];
            }
            atb[r] += row[r] * y;
        }
    }
    solve(ata, atb).map(|c| c[0])
}

/// Derivative of the cubic through four points.
pub(crate) fn lagrange4_slope<T: Real>(xs: &[T; 4], ys: &[T; 4], x: T) -> T {
    let mut acc = T::zero();
    for i in 0..4 {
        let mut denom = T::one();
        for j in 0..4 {
            if i != j {
                denom *= xs[i] - xs[j];
            }
        }
        let mut num = T::zero();
        for k in 0..4 {
            if k == i {
                continue;
            }
            let mut prod = T::one();
            for j in 0..4 {
                if j != i && j != k {
                    prod *= x - xs[j];
                }
            }
            num += prod;
        }
        acc += ys[i] * num / denom;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, CoordinateStyle};

    #[test]
    fn harmonic_fit_reproduces_harmonic_quadratics() {
        let g = build_grid(1, 64, 1.0f64, CoordinateStyle::Cartesian).unwrap();
        let f = |c: [f64; 4]| 0.3 + c[0] - 2.0 * c[1] + 1.5 * (c[0] * c[0] - c[1] * c[1]) + 0.7 * c[0] * c[1];
        let p = [0.113, -0.271];
        let fit = fit_harmonic(&g, p, |i| g.coords(i)[0] < 0.1, |i| f(g.coords(i))).unwrap();
        assert!((fit.value(p) - f([p[0], p[1], 0.0, 0.0])).abs() < 1e-12);
        let gr = fit.gradient(p);
        assert!((gr[0] - (1.0 + 3.0 * p[0] + 0.7 * p[1])).abs() < 1e-10);
        assert!((gr[1] - (-2.0 - 3.0 * p[1] + 0.7 * p[0])).abs() < 1e-10);
    }

    #[test]
    fn cubic_fits_are_exact_on_cubics() {
        let xs = [0.0, 0.5, 1.5, 2.0];
        let f = |x: f64| 1.0 - x + 2.0 * x * x * x;
        let ys = xs.map(f);
        assert!((lagrange4_slope(&xs, &ys, 0.8) - (-1.0 + 6.0 * 0.64)).abs() < 1e-12);
        let xs: Vec<f64> = (0..7).map(|k| 0.3 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        assert!((cubic_lsq(&xs, &ys, 0.8).unwrap() - f(0.8)).abs() < 1e-12);
        assert!(cubic_lsq(&xs[..3], &ys[..3], 0.8).is_none());
    }
}
