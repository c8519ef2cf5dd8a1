use crate::error::{Error, Result};
use crate::grid::{c1_gradient_sup, c2_norm, ScalarField};
use crate::quadrature::GaussRule;
use crate::scalar::Real;

/// Nodes of the rule used for the smoothing integral.
const CONVOLUTION_NODES: usize = 64;

/// The even bump `f(s) = η(s/w)/w` with `η(x) = C exp(-1/(1-x²))` on `(-1, 1)`.
#[derive(Clone, Debug)]
pub struct BumpProfile<T: Real> {
    width: T,
    norm: T,
    rule: GaussRule<T>,
}

impl<T: Real> BumpProfile<T> {
    pub fn width(&self) -> T {
        self.width
    }

    /// `η(x)` on the unit interval, normalized to unit mass.
    pub fn eta(&self, x: T) -> T {
        let one = T::one();
        if x.abs() >= one {
            T::zero()
        } else {
            self.norm * (-(one / (one - x * x))).exp()
        }
    }

    /// `f(s)`.
    pub fn density(&self, s: T) -> T {
        self.eta(s / self.width) / self.width
    }

    /// `∫ max(d + s, 0) f(s) ds`, so that the regularized max is `β + smooth_plus(α - β)`.
    pub fn smooth_plus(&self, d: T) -> T {
        let w = self.width;
        if d >= w {
            return d;
        }
        if d <= -w {
            return T::zero();
        }
        self.rule
            .integrate(-d / w, T::one(), |x| (d + w * x) * self.eta(x))
    }

    /// `∫ max(α + s, β) f(s) ds`.
    pub fn value(&self, alpha: T, beta: T) -> T {
        let d = alpha - beta;
        if d >= self.width {
            alpha
        } else if d <= -self.width {
            beta
        } else {
            beta + self.smooth_plus(d)
        }
    }
}

pub fn bump_profile<T: Real>(width: T) -> Result<BumpProfile<T>> {
    if !(width > T::zero()) || !width.is_finite() {
        return Err(Error::Hypothesis(format!("bump width {width} must be positive")));
    }
    // composite rule for the normalizing constant
    let panels = 16;
    let fine = GaussRule::<T>::new(32);
    let mut mass = T::zero();
    for k in 0..panels {
        let a = T::from_usize_lossy(2 * k) / T::from_usize_lossy(panels) - T::one();
        let b = T::from_usize_lossy(2 * k + 2) / T::from_usize_lossy(panels) - T::one();
        mass += fine.integrate(a, b, |x| (-(T::one() / (T::one() - x * x))).exp());
    }
    Ok(BumpProfile {
        width,
        norm: mass.recip(),
        rule: GaussRule::new(CONVOLUTION_NODES),
    })
}

/// Smooth maximum of two sampled psh functions.
///
/// Requires `a > b + w` at the node nearest 0 and `a < b - w` on the
/// boundary layer of the mask.
pub fn regularized_max<T: Real>(
    a: &ScalarField<T>,
    b: &ScalarField<T>,
    bump_width: T,
) -> Result<ScalarField<T>> {
    let profile = bump_profile(bump_width)?;
    let g = *a.grid();
    if !g.same_layout(b.grid()) || a.mask() != b.mask() {
        return Err(Error::GridMismatch("regularized_max needs a common grid".into()));
    }
    let mask = a.mask();
    let centre = (0..g.len())
        .filter(|&i| mask[i])
        .min_by(|&i, &j| g.norm_sq(i).partial_cmp(&g.norm_sq(j)).unwrap())
        .ok_or_else(|| Error::EmptyRegion("empty mask".into()))?;
    if !(a.value(centre) > b.value(centre) + bump_width) {
        return Err(Error::Hypothesis(format!(
            "a(0) > b(0) + w fails: a(0) = {}, b(0) = {}, w = {}",
            a.value(centre),
            b.value(centre),
            bump_width
        )));
    }
    let interior = a.interior();
    if let Some(i) = (0..g.len())
        .find(|&i| mask[i] && !interior[i] && !(a.value(i) < b.value(i) - bump_width))
    {
        return Err(Error::Hypothesis(format!(
            "a < b - w fails on the boundary at node {i}: a = {}, b = {}",
            a.value(i),
            b.value(i)
        )));
    }
    a.zip_with(b, |x, y| profile.value(x, y))
}

/// Right-hand side of the C² estimate `w + |a-b|_{C²} + |d(a-b)|²_{C⁰}/w`.
pub fn regularized_max_bound<T: Real>(
    a: &ScalarField<T>,
    b: &ScalarField<T>,
    bump_width: T,
) -> Result<T> {
    let d1 = c1_gradient_sup(a, b, None)?;
    Ok(bump_width + c2_norm(a, b)? + d1 * d1 / bump_width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_has_unit_mass() {
        let p = bump_profile(0.3f64).unwrap();
        // independent oracle: composite midpoint rule
        let n = 200_000;
        let h = 0.6 / n as f64;
        let m: f64 = (0..n).map(|k| p.density(-0.3 + (k as f64 + 0.5) * h) * h).sum();
        assert!((m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn branches_are_exact() {
        let p = bump_profile(0.3f64).unwrap();
        assert_eq!(p.value(1.0, 0.0), 1.0);
        assert_eq!(p.value(0.0, 1.0), 1.0);
        assert_eq!(p.value(0.8, 0.4), 0.8);
    }

    #[test]
    fn continuous_at_the_switch() {
        let p = bump_profile(0.25f64).unwrap();
        let inside = p.smooth_plus(0.25 - 1e-12);
        assert!((inside - 0.25).abs() < 1e-9);
        assert!(p.smooth_plus(-0.25 + 1e-12).abs() < 1e-12);
        // monotone and convex in d
        let ds: Vec<f64> = (0..=50).map(|k| -0.25 + 0.01 * k as f64).collect();
        let v: Vec<f64> = ds.iter().map(|&d| p.smooth_plus(d)).collect();
        for w in v.windows(3) {
            assert!(w[1] >= w[0] - 1e-14);
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12);
        }
    }

    #[test]
    fn rejects_bad_width() {
        assert!(bump_profile(0.0f64).is_err());
        assert!(bump_profile(-1.0f64).is_err());
    }
}
