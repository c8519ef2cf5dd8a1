use super::*;
use crate::geodesic::{ray_from_potential, RayOptions};
use crate::grid::{build_grid, CoordinateStyle};
use crate::potential::builtin;

fn grid(res: usize) -> GridSpec<f64> {
    build_grid(1, res, 1.0, CoordinateStyle::Cartesian).unwrap()
}

fn radial_ray(name: &str, res: usize) -> (Potential<f64>, GeodesicRay<f64>) {
    let p = builtin::<f64>(name).unwrap();
    let mut opts = RayOptions::new(Backend::Radial);
    opts.cutoff = Some(0.6);
    opts.n_lambda = 48;
    opts.n_t = 256;
    let ray = ray_from_potential(&p, &grid(res), &opts).unwrap();
    (p, ray)
}

fn opts() -> FoliationOptions<f64> {
    let mut o = FoliationOptions::new(Backend::Radial);
    o.steps = 512;
    o
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[test]
fn flat_leaves_are_constant_in_the_chart() {
    let (p, ray) = radial_ray("flat", 96);
    let level = LevelSet::new(&p, 0.25, ray.grid(), &opts()).unwrap();
    let sm = RaySmoother::new(&ray);
    let a = level.anchor(0.4).unwrap();
    // the ±δ difference of G carries a δ²/(6λ²) bias
    assert!((a[0] * a[0] + a[1] * a[1] - 0.25).abs() < 1e-4);
    let leaf = trace_on_level(&level, Some(&sm), a, ray.t_max(), &opts()).unwrap();
    for s in &leaf.samples {
        assert!(dist(s.z, a) < 1e-9, "t = {}", s.t);
    }
    assert!(dist(leaf.limit, a) < 1e-9);
    assert!(leaf.drift < 1e-3, "drift {}", leaf.drift);
    assert!((disc_area(&leaf, &p).unwrap() - 0.25).abs() < 1e-2);
}

#[test]
fn leaf_through_origin_is_fixed() {
    for name in ["flat", "quartic"] {
        let (p, ray) = radial_ray(name, 32);
        let leaf = trace_leaf(&ray, &p, [0.0, 0.0], &opts()).unwrap();
        assert!(leaf.samples.iter().all(|s| s.z == [0.0, 0.0]));
        assert_eq!(leaf.limit, [0.0, 0.0]);
        assert_eq!(disc_area(&leaf, &p).unwrap(), 0.0);
    }
}

#[test]
fn quartic_leaf_shrinks_and_bounds_area_lambda() {
    let (p, ray) = radial_ray("quartic", 96);
    let level = LevelSet::new(&p, 0.25, ray.grid(), &opts()).unwrap();
    let sm = RaySmoother::new(&ray);
    let leaf = trace_on_level(&level, Some(&sm), level.anchor(1.1).unwrap(), ray.t_max(), &opts()).unwrap();
    let norms: Vec<f64> = leaf.samples.iter().map(|s| s.z[0].hypot(s.z[1])).collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(leaf.drift < 1e-3, "drift {}", leaf.drift);
    assert!((disc_area(&leaf, &p).unwrap() - 0.25).abs() < 1e-2);
}

#[test]
fn anchor_beyond_cutoff_is_rejected() {
    let (p, ray) = radial_ray("flat", 32);
    assert!(trace_leaf(&ray, &p, [0.95, 0.0], &opts()).is_err());
}

#[test]
fn flat_tubular_map_is_the_identity() {
    let (p, ray) = radial_ray("flat", 96);
    let map = tubular_map_on_levels(&ray, &p, &[0.15, 0.3], 6, &opts()).unwrap();
    assert_eq!(map.entries.len(), 12);
    for e in &map.entries {
        assert!(dist(e.u, e.z) < 1e-9);
    }
    let report = check_pullback(&map, &ray, &p).unwrap();
    assert!(report.max_deviation.is_finite());
}

#[test]
fn single_anchor_is_too_coarse() {
    let (p, ray) = radial_ray("flat", 32);
    let map = TubularMap::new(
        vec![TubeEntry {
            u: [0.3, 0.0],
            z: [0.3, 0.0],
            lambda: 0.09,
        }],
        ray.grid().spacing(),
    )
    .unwrap();
    assert!(matches!(check_pullback(&map, &ray, &p), Err(Error::TooCoarse(_))));
}

#[test]
fn colliding_limits_are_not_injective() {
    let e = |u: [f64; 2], z: [f64; 2]| TubeEntry { u, z, lambda: 0.1 };
    let err = TubularMap::new(vec![e([0.1, 0.0], [0.1, 0.0]), e([0.1, 1e-6], [0.2, 0.0])], 1e-3).unwrap_err();
    assert!(matches!(err, Error::NonInjective(0, 1)));
}

#[test]
fn leaf_and_map_files_round_trip() {
    let (p, ray) = radial_ray("quartic", 48);
    let leaf = trace_leaf(&ray, &p, [0.3, 0.2], &opts()).unwrap();
    let mut buf = Vec::new();
    write_leaf_csv(&leaf, &mut buf).unwrap();
    let back: Vec<LeafSample<f64>> = read_leaf_csv(&buf[..]).unwrap();
    assert_eq!(back.len(), leaf.samples.len());
    for (a, b) in back.iter().zip(&leaf.samples) {
        assert_eq!((a.t, a.z, a.h), (b.t, b.z, b.h));
    }

    let map = TubularMap::new(
        vec![
            TubeEntry { u: [0.1, 0.2], z: [0.11, 0.19], lambda: 0.05 },
            TubeEntry { u: [-0.3, 0.0], z: [-0.29, 0.01], lambda: 0.09 },
        ],
        1e-3,
    )
    .unwrap();
    let mut buf = Vec::new();
    write_tubular_csv(&map, &mut buf).unwrap();
    let back = read_tubular_csv::<f64, _>(&buf[..], 1e-3).unwrap();
    assert_eq!(back.entries, map.entries);
}
