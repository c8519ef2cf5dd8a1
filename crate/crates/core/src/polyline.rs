//! Planar polylines and the marching-squares level-set extractor.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{CoordinateStyle, GridSpec};
use crate::scalar::Real;

/// Ordered vertices in the `z = x + iy` plane; a closed polyline has an
/// implicit edge from the last vertex back to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline<T: Real> {
    pub points: Vec<[T; 2]>,
    pub closed: bool,
}

impl<T: Real> Polyline<T> {
    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            closed: true,
        }
    }

    pub fn closed(points: Vec<[T; 2]>) -> Self {
        Self {
            points,
            closed: true,
        }
    }

    /// Regular `k`-gon inscribed in the circle of radius `r` about the origin.
    pub fn circle(r: T, k: usize) -> Self {
        let pts = (0..k)
            .map(|j| {
                let th = T::lit(2.0) * T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(k);
                [r * th.cos(), r * th.sin()]
            })
            .collect();
        Self::closed(pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Edges as vertex pairs, including the closing edge.
    pub fn segments(&self) -> impl Iterator<Item = ([T; 2], [T; 2])> + '_ {
        let n = self.points.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// Shoelace area, positive for counter-clockwise order.
    pub fn signed_area(&self) -> T {
        let half = T::lit(0.5);
        self.segments()
            .map(|(p, q)| half * (p[0] * q[1] - q[0] * p[1]))
            .sum()
    }

    pub fn length(&self) -> T {
        self.segments()
            .map(|(p, q)| (q[0] - p[0]).hypot(q[1] - p[1]))
            .sum()
    }

    /// Winding number of the closed curve about `p`.
    pub fn winding_number(&self, p: [T; 2]) -> i32 {
        let mut w = 0;
        for (a, b) in self.segments() {
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
            if a[1] <= p[1] {
                if b[1] > p[1] && cross > T::zero() {
                    w += 1;
                }
            } else if b[1] <= p[1] && cross < T::zero() {
                w -= 1;
            }
        }
        w
    }

    pub fn encloses(&self, p: [T; 2]) -> bool {
        self.closed && self.winding_number(p) != 0
    }

    /// Checks that no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let segs: Vec<_> = self.segments().collect();
        let n = segs.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (self.closed && i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(segs[i], segs[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Euclidean distance from `p` to the nearest edge.
    pub fn distance_to(&self, p: [T; 2]) -> T {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(T::infinity(), T::min)
    }

    /// Writes `x,y` rows after a `# closed=...` header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# closed={}", self.closed)?;
        for p in &self.points {
            writeln!(out, "{:e},{:e}", p[0].to_f64_lossy(), p[1].to_f64_lossy())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut closed = true;
        let mut points = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("# closed=") {
                closed = rest.trim() == "true";
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Parse {
                line: k + 1,
                msg: format!("expected x,y but found {line:?}"),
            };
            let (x, y) = line.split_once(',').ok_or_else(bad)?;
            let x: f64 = x.trim().parse().map_err(|_| bad())?;
            let y: f64 = y.trim().parse().map_err(|_| bad())?;
            points.push([T::lit(x), T::lit(y)]);
        }
        Ok(Self { points, closed })
    }
}

fn orient<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect<T: Real>(s: ([T; 2], [T; 2]), t: ([T; 2], [T; 2])) -> bool {
    let d1 = orient(t.0, t.1, s.0);
    let d2 = orient(t.0, t.1, s.1);
    let d3 = orient(s.0, s.1, t.0);
    let d4 = orient(s.0, s.1, t.1);
    let z = T::zero();
    ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z))
}

pub(crate) fn point_segment_distance<T: Real>(p: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > T::zero() {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2)
            .max(T::zero())
            .min(T::one())
    } else {
        T::zero()
    };
    (p[0] - a[0] - s * dx).hypot(p[1] - a[1] - s * dy)
}

/// How the crossing point on a cut grid edge is placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    /// Linear interpolation of the level function.
    Linear,
    /// Linear extrapolation of `sqrt(level)` from the inside, for functions
    /// that vanish quadratically at the boundary (obstacle problems).
    SquareRoot,
}

/// Boundary of `{f > 0}` through the nodes of an `n = 1` Cartesian grid.
///
/// Nodes outside `domain` count as outside the region. Returns the closed
/// loop that encloses `centre` (largest if several), counter-clockwise; an
/// empty polyline when no loop encloses it.
pub fn level_loop<T: Real>(
    grid: &GridSpec<T>,
    f: &[T],
    domain: &[bool],
    crossing: Crossing,
    centre: [T; 2],
) -> Result<Polyline<T>> {
    let loops = level_loops(grid, f, domain, crossing)?;
    let best = loops
        .into_iter()
        .filter(|l| l.encloses(centre))
        .max_by(|a, b| {
            a.signed_area()
                .abs()
                .partial_cmp(&b.signed_area().abs())
                .unwrap()
        });
    Ok(best.unwrap_or_else(Polyline::empty))
}

/// All closed boundary loops of `{f > 0}`, each counter-clockwise.
pub fn level_loops<T: Real>(
    grid: &GridSpec<T>,
    f: &[T],
    domain: &[bool],
    crossing: Crossing,
) -> Result<Vec<Polyline<T>>> {
    if grid.dim() != 1 || grid.style() != CoordinateStyle::Cartesian {
        return Err(Error::Unsupported(
            "level curves need an n = 1 Cartesian grid".into(),
        ));
    }
    if f.len() != grid.len() || domain.len() != grid.len() {
        return Err(Error::GridMismatch("level field has the wrong length".into()));
    }
    let res = grid.resolution();
    let inside = |i: usize| domain[i] && f[i] > T::zero();
    let node_xy = |i: usize| [grid.axis_coord(i % res), grid.axis_coord(i / res)];

    let point_on = |p: usize, q: usize| -> [T; 2] {
        // p inside, q outside
        let (a, b) = (node_xy(p), node_xy(q));
        let fp = f[p];
        let mut s = None;
        if crossing == Crossing::SquareRoot {
            let beyond = 2 * p as isize - q as isize;
            let same_line = beyond >= 0
                && (beyond as usize) < f.len()
                && ((p as isize - q as isize).abs() == res as isize
                    || (beyond as usize) / res == p / res);
            if same_line && inside(beyond as usize) {
                let (rp, rb) = (fp.sqrt(), f[beyond as usize].sqrt());
                if rb > rp {
                    s = Some((rp / (rb - rp)).min(T::one()));
                }
            }
        }
        let s = s.unwrap_or_else(|| {
            let fq = if domain[q] && f[q].is_finite() { f[q] } else { T::zero() };
            if fp - fq > T::zero() {
                (fp / (fp - fq)).min(T::one())
            } else {
                T::lit(0.5)
            }
        });
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    };

    // segments keyed by the grid edges they end on
    let mut points: HashMap<(usize, usize), [T; 2]> = HashMap::new();
    let mut segments: Vec<((usize, usize), (usize, usize))> = Vec::new();
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    for j in 0..res - 1 {
        for i in 0..res - 1 {
            let c = [j * res + i, j * res + i + 1, (j + 1) * res + i + 1, (j + 1) * res + i];
            let ins = c.map(inside);
            let count = ins.iter().filter(|&&b| b).count();
            if count == 0 || count == 4 {
                continue;
            }
            let mut cut = |k: usize| -> (usize, usize) {
                let (p, q) = (c[k], c[(k + 1) % 4]);
                let e = key(p, q);
                points
                    .entry(e)
                    .or_insert_with(|| if ins[k] { point_on(p, q) } else { point_on(q, p) });
                e
            };
            let saddle = count == 2 && ins[0] == ins[2];
            if saddle {
                // separate the two inside corners
                for k in 0..4 {
                    if ins[k] {
                        let e1 = cut((k + 3) % 4);
                        let e2 = cut(k);
                        segments.push((e1, e2));
                    }
                }
            } else {
                let edges: Vec<_> = (0..4).filter(|&k| ins[k] != ins[(k + 1) % 4]).collect();
                let e1 = cut(edges[0]);
                let e2 = cut(edges[1]);
                segments.push((e1, e2));
            }
        }
    }

    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(s);
        by_edge.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let first = segments[start].0;
        let mut cur = segments[start].1;
        let mut chain = vec![first];
        let mut closed = false;
        loop {
            if cur == first {
                closed = true;
                break;
            }
            chain.push(cur);
            let next = by_edge[&cur].iter().copied().find(|&s| !used[s]);
            let Some(s) = next else { break };
            used[s] = true;
            let (a, b) = segments[s];
            cur = if a == cur { b } else { a };
        }
        if closed {
            let mut poly = Polyline::closed(chain.iter().map(|e| points[e]).collect());
            if poly.signed_area() < T::zero() {
                poly.points.reverse();
            }
            loops.push(poly);
        }
    }
    // deterministic order: by first vertex
    loops.sort_by(|a, b| {
        let (p, q) = (a.points[0], b.points[0]);
        (p[1], p[0]).partial_cmp(&(q[1], q[0])).unwrap()
    });
    Ok(loops)
}
