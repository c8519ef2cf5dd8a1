use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

use pshlab::envelope::extract_equilibrium;
use pshlab::foliation::{
    check_pullback, disc_area, trace_on_level, write_leaf_csv, write_tubular_csv, FoliationOptions, Leaf,
    LevelSet, RaySmoother, TubeEntry, TubularMap,
};
use pshlab::geodesic::{
    certified_ray, hamiltonian, hmae_residual, involution_error, weak_solution, write_ray, GeodesicRay,
    RayOptions,
};

use super::{solve_all, write_field};
use crate::config::RunConfig;
use crate::error::{CliError, Stage};

/// Tolerance for the sign tests on `u` and the slices.
pub(crate) const HMAE_TOL: f64 = 1e-8;

/// The configured ray and its `lambda_certified`.
pub(crate) fn build_ray(cfg: &RunConfig) -> Result<(GeodesicRay<f64>, Option<f64>), CliError> {
    let mut o = RayOptions::new(cfg.backend);
    o.n_lambda = cfg.n_lambda;
    o.n_t = cfg.n_t;
    o.cutoff = cfg.cutoff;
    o.tol = cfg.tol;
    o.max_iters = cfg.max_iters;
    certified_ray(&cfg.potential, &cfg.grid(), &o).stage("geodesic_legendre::ray_from_potential")
}

pub(super) fn geodesic(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (ray, certified) = build_ray(cfg)?;
    let dir = out.join("geodesic");
    write_ray(&ray, &dir).stage("geodesic_legendre::write_ray")?;

    let ham = hamiltonian(&ray).stage("geodesic_legendre::hamiltonian")?;
    write_field(&ham.h0, &dir.join("h0.csv"))?;
    let weak = weak_solution(&ray, ray.cutoff()).stage("geodesic_legendre::weak_solution")?;
    let nt = ray.t_grid().len();
    for j in [0, nt / 2, nt - 1] {
        let f = weak.field(j).stage("geodesic_legendre::weak_solution")?;
        write_field(&f, &dir.join(format!("weak_{j:04}.csv")))?;
    }

    let mut s = String::new();
    writeln!(s, "cutoff = {:e}", ray.cutoff()).unwrap();
    writeln!(s, "delta_lambda = {:e}", ray.delta_lambda()).unwrap();
    let certified = certified.map_or("none".to_string(), |l| format!("{l:e}"));
    writeln!(s, "lambda_certified = {certified}").unwrap();
    writeln!(s, "fd_discrepancy = {:e}", ham.fd_discrepancy).unwrap();
    let inv = involution_error(&ray).stage("geodesic_legendre::legendre_slices")?;
    writeln!(s, "involution_error = {inv:e}").unwrap();
    if cfg.potential.dim() == 1 {
        let r = hmae_residual(&ray, &cfg.potential, HMAE_TOL).stage("geodesic_legendre::hmae_residual")?;
        writeln!(s, "convexity_defect = {:e}", r.convexity_defect).unwrap();
        writeln!(s, "monotonicity_defect = {:e}", r.monotonicity_defect).unwrap();
        writeln!(s, "max_slice_residual = {:e}", r.max_slice_residual()).unwrap();
    }
    fs::write(dir.join("residuals.txt"), s)?;
    Ok(())
}

pub(crate) fn foliation_options(cfg: &RunConfig) -> FoliationOptions<f64> {
    let mut o = FoliationOptions::new(cfg.backend);
    o.delta = cfg.delta;
    o.steps = cfg.leaf_steps;
    o.tol = cfg.tol;
    o.max_iters = cfg.max_iters;
    o
}

/// One traced leaf with its diagnostics.
pub(crate) struct LeafRecord {
    pub level: f64,
    pub theta: f64,
    pub leaf: Leaf<f64>,
    pub area: f64,
    /// Largest distance from the leaf's boundary to `∂S_{λ_leaf}`.
    pub boundary_distance: f64,
}

/// Leaves at `leaf_angles` equispaced directions on each configured level.
pub(crate) fn trace_levels(cfg: &RunConfig, ray: &GeodesicRay<f64>) -> Result<Vec<LeafRecord>, CliError> {
    let opts = foliation_options(cfg);
    let smoother = RaySmoother::new(ray);
    let grid = cfg.grid();
    let n = cfg.leaf_angles.max(1);
    let per_level = cfg
        .lambdas
        .par_iter()
        .map(|&l| {
            let level = LevelSet::new(&cfg.potential, l, &grid, &opts).stage("foliation_tube::level_set")?;
            (0..n)
                .map(|k| {
                    let theta = std::f64::consts::TAU * k as f64 / n as f64;
                    let a = level.anchor(theta).ok_or_else(|| CliError::Numerical {
                        stage: "foliation_tube::trace_leaf",
                        source: pshlab::Error::Hypothesis(format!("level {l} has no boundary point at angle {theta}")),
                    })?;
                    let leaf = trace_on_level(&level, Some(&smoother), a, ray.t_max(), &opts)
                        .stage("foliation_tube::trace_leaf")?;
                    Ok((l, theta, leaf))
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let traced: Vec<_> = per_level.into_iter().flatten().collect();

    let leaf_lambdas: Vec<f64> = traced.iter().map(|(_, _, leaf)| leaf.lambda).collect();
    let envelopes = solve_all(cfg, &leaf_lambdas)?;
    traced
        .into_iter()
        .zip(envelopes)
        .map(|((level, theta, leaf), e)| {
            let area = disc_area(&leaf, &cfg.potential).stage("foliation_tube::disc_area")?;
            let (_, eq) = extract_equilibrium(&e, e.coincidence_tol).stage("envelope_solver::extract_equilibrium")?;
            let boundary_distance = leaf
                .boundary
                .points
                .iter()
                .map(|&p| eq.distance_to(p))
                .fold(0.0, f64::max);
            Ok(LeafRecord {
                level,
                theta,
                leaf,
                area,
                boundary_distance,
            })
        })
        .collect()
}

pub(super) fn foliate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (ray, _) = build_ray(cfg)?;
    let records = trace_levels(cfg, &ray)?;
    let dir = out.join("foliation");
    fs::create_dir_all(dir.join("leaves"))?;

    let mut table = String::from("level,theta,lambda_leaf,area,drift,limit_re,limit_im,boundary_distance\n");
    for (k, r) in records.iter().enumerate() {
        let path = dir.join("leaves").join(format!("leaf_{k:03}.csv"));
        write_leaf_csv(&r.leaf, BufWriter::new(fs::File::create(path)?)).stage("foliation_tube::write_leaf")?;
        writeln!(
            table,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.level, r.theta, r.leaf.lambda, r.area, r.leaf.drift, r.leaf.limit[0], r.leaf.limit[1], r.boundary_distance
        )
        .unwrap();
    }
    fs::write(dir.join("areas.csv"), table)?;

    let entries = records
        .iter()
        .map(|r| TubeEntry {
            u: r.leaf.limit,
            z: r.leaf.anchor,
            lambda: r.leaf.lambda,
        })
        .collect();
    let map = TubularMap::new(entries, ray.grid().spacing()).stage("foliation_tube::build_tubular_map")?;
    write_tubular_csv(&map, BufWriter::new(fs::File::create(dir.join("tubular.csv"))?))
        .stage("foliation_tube::write_tubular")?;
    let pb = check_pullback(&map, &ray, &cfg.potential).stage("foliation_tube::check_pullback")?;
    fs::write(
        dir.join("pullback.txt"),
        format!(
            "max_deviation = {:e}\nmean_deviation = {:e}\nstep = {:e}\n",
            pb.max_deviation, pb.mean_deviation, pb.step
        ),
    )?;
    Ok(())
}
