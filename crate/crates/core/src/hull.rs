//! Lower convex hulls of point sets and upper envelopes of line families.

use crate::scalar::Real;

/// Indices of the lower convex hull of points with strictly increasing `x`.
pub fn lower_hull<T: Real>(x: &[T], y: &[T]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord a-i
            let cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
            if cross <= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Upper envelope of lines `y = intercept + slope * t`, for maxima queries.
#[derive(Clone, Debug, PartialEq)]
pub struct LineEnvelope<T: Real> {
    /// `(slope, intercept, original index)` of the lines that attain the max somewhere,
    /// by increasing slope.
    lines: Vec<(T, T, usize)>,
    /// `breaks[k]` is where line `k + 1` takes over from line `k`.
    breaks: Vec<T>,
}

impl<T: Real> LineEnvelope<T> {
    /// Builds the envelope; `slopes` must be strictly increasing.
    pub fn new(slopes: &[T], intercepts: &[T]) -> Self {
        let mut lines: Vec<(T, T, usize)> = Vec::with_capacity(slopes.len());
        let mut breaks: Vec<T> = Vec::with_capacity(slopes.len());
        for (i, (&m, &c)) in slopes.iter().zip(intercepts).enumerate() {
            loop {
                let Some(&(m0, c0, _)) = lines.last() else {
                    break;
                };
                let x = (c0 - c) / (m - m0);
                if breaks.last().is_some_and(|&b| x <= b) {
                    lines.pop();
                    breaks.pop();
                } else {
                    breaks.push(x);
                    break;
                }
            }
            lines.push((m, c, i));
        }
        Self { lines, breaks }
    }

    fn segment(&self, t: T) -> usize {
        // ties resolve to the steeper line
        self.breaks.partition_point(|&b| b <= t)
    }

    /// `max_i (intercept_i + slope_i t)`.
    pub fn value(&self, t: T) -> T {
        let (m, c, _) = self.lines[self.segment(t)];
        c + m * t
    }

    /// Index and slope of the maximizing line, largest slope on ties.
    pub fn argmax(&self, t: T) -> (usize, T) {
        let (m, _, i) = self.lines[self.segment(t)];
        (i, m)
    }

    /// Points where the maximizer changes.
    pub fn breakpoints(&self) -> &[T] {
        &self.breaks
    }

    /// Active lines as `(slope, intercept, index)`.
    pub fn lines(&self) -> &[(T, T, usize)] {
        &self.lines
    }
}
