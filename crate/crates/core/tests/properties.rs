use pshlab::envelope::radial_envelope;
use pshlab::grid::{build_grid, CoordinateStyle};
use pshlab::hull::LineEnvelope;
use pshlab::potential::builtin;
use proptest::prelude::*;

proptest! {
    #[test]
    fn line_envelope_is_the_pointwise_max(
        lines in prop::collection::vec((0.01f64..1.0, -5.0f64..5.0), 1..24),
        t in -10.0f64..10.0,
    ) {
        // slopes as partial sums of positive gaps, so strictly increasing
        let slopes: Vec<f64> = lines
            .iter()
            .scan(-5.0, |m, &(gap, _)| {
                *m += gap;
                Some(*m)
            })
            .collect();
        let intercepts: Vec<f64> = lines.iter().map(|&(_, c)| c).collect();
        let env = LineEnvelope::new(&slopes, &intercepts);
        let at = |k: usize| slopes[k] * t + intercepts[k];
        let brute = (0..slopes.len()).map(at).fold(f64::NEG_INFINITY, f64::max);
        let scale = 1e-12 * (1.0 + brute.abs());
        prop_assert!((env.value(t) - brute).abs() <= scale);
        let (k, m) = env.argmax(t);
        prop_assert_eq!(m, slopes[k]);
        prop_assert!((at(k) - brute).abs() <= scale);
    }

    #[test]
    fn equilibrium_sets_grow_with_lambda(a in 0.02f64..0.6, b in 0.02f64..0.6) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let g = build_grid(1, 40, 1.0, CoordinateStyle::Cartesian).unwrap();
        let p = builtin::<f64>("quartic").unwrap();
        let small = radial_envelope(&p, lo, &g).unwrap().complement();
        let large = radial_envelope(&p, hi, &g).unwrap().complement();
        prop_assert!(small.iter().zip(&large).all(|(&x, &y)| !x || y));
    }
}
