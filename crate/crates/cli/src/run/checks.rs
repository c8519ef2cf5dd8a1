use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pshlab::envelope::{grid_envelope, maximality_residual, radial_envelope, Backend};
use pshlab::foliation::{check_pullback, TubeEntry, TubularMap};
use pshlab::geodesic::{
    default_cutoff, hamiltonian, hmae_residual, involution_error, level_set_mismatch,
};
use pshlab::potential::Symmetry;

use super::stages::{build_ray, trace_levels, HMAE_TOL};
use super::{inclusion_violations, mass_of, solve_all};
use crate::config::RunConfig;
use crate::error::{CliError, Stage};

/// One machine-readable verification row.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

const ORACLE_SUP: f64 = 5e-3;
const MOMENT_RATIO: f64 = 1e-3;
const MASS_ERROR: f64 = 2e-3;
const INVOLUTION_EXACT: f64 = 1e-8;
const INVOLUTION_GRID: f64 = 5e-3;
const AREA_ERROR: f64 = 1e-2;
const DRIFT: f64 = 1e-3;
const PULLBACK: f64 = 5e-2;
const SWEEP: usize = 16;

/// Every check that applies to the configured potential and backend.
pub fn verify_checks(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let grid = cfg.grid();
    let h = grid.spacing();
    let dim1 = cfg.potential.dim() == 1;
    let envelopes = solve_all(cfg, &cfg.lambdas)?;

    for e in &envelopes {
        let l = e.lambda;
        if dim1 && cfg.potential.symmetry() == Symmetry::Radial {
            let g = grid_envelope(&cfg.potential, l, &grid, cfg.tol, cfg.max_iters)
                .stage("envelope_solver::grid_envelope")?;
            let r = radial_envelope(&cfg.potential, l, &grid).stage("envelope_solver::radial_envelope")?;
            let sup = (0..grid.len())
                .filter(|&i| g.envelope.mask()[i])
                .map(|i| (g.envelope.value(i) - r.envelope.value(i)).abs())
                .fold(0.0, f64::max);
            out.push(Check::at_most(format!("grid_vs_oracle[{l}]"), sup, ORACLE_SUP));
        }
        if dim1 {
            let res = maximality_residual(e).stage("envelope_solver::maximality_residual")?;
            out.push(Check::at_most(format!("maximality[{l}]"), res, 10.0 * h));
        }
        let (mass, ratio) = mass_of(cfg, e)?;
        if let Some(r) = ratio {
            out.push(Check::at_most(format!("moment_ratio[{l}]"), r, MOMENT_RATIO));
            out.push(Check::at_most(format!("mass[{l}]"), (mass - l).abs(), MASS_ERROR));
        }
    }

    let c = match cfg.cutoff {
        Some(c) => c,
        None => default_cutoff(&cfg.potential, &grid).stage("geodesic_legendre::default_cutoff")?,
    };
    let sweep: Vec<f64> = (1..=SWEEP).map(|k| c * k as f64 / (SWEEP + 1) as f64).collect();
    let flow = solve_all(cfg, &sweep)?;
    out.push(Check::at_most("monotonicity", inclusion_violations(&flow) as f64, 0.0));

    let (ray, certified) = build_ray(cfg)?;
    // the checks below are only claimed for λ inside the certified range
    let top = cfg.lambdas.iter().copied().fold(0.0, f64::max);
    out.push(Check::at_most("certified_range", top, certified.unwrap_or(f64::NEG_INFINITY)));
    let inv = involution_error(&ray).stage("geodesic_legendre::legendre_slices")?;
    let inv_tol = if cfg.backend == Backend::Grid { INVOLUTION_GRID } else { INVOLUTION_EXACT };
    out.push(Check::at_most("involution", inv, inv_tol));
    let mut mismatch = 0;
    for &l in ray.lambdas() {
        mismatch += level_set_mismatch(&ray, l, HMAE_TOL)
            .stage("geodesic_legendre::legendre_slices")?
            .len();
    }
    out.push(Check::at_most("level_sets", mismatch as f64, 0.0));
    let ham = hamiltonian(&ray).stage("geodesic_legendre::hamiltonian")?;
    out.push(Check::at_most("hamiltonian", ham.fd_discrepancy, ray.delta_lambda()));
    if dim1 {
        let r = hmae_residual(&ray, &cfg.potential, HMAE_TOL).stage("geodesic_legendre::hmae_residual")?;
        out.push(Check::at_most("convexity", -r.convexity_defect, HMAE_TOL));
        out.push(Check::at_most("t_monotonicity", -r.monotonicity_defect, HMAE_TOL));
    }

    if dim1 && cfg.backend != Backend::Reinhardt {
        let records = trace_levels(cfg, &ray)?;
        let worst = |f: &dyn Fn(&super::stages::LeafRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
        out.push(Check::at_most("disc_area", worst(&|r| (r.area - r.leaf.lambda).abs()), AREA_ERROR));
        out.push(Check::at_most("h_drift", worst(&|r| r.leaf.drift), DRIFT));
        out.push(Check::at_most("boundary_distance", worst(&|r| r.boundary_distance), 2.0 * h));
        if records.len() >= 4 {
            let entries = records
                .iter()
                .map(|r| TubeEntry {
                    u: r.leaf.limit,
                    z: r.leaf.anchor,
                    lambda: r.leaf.lambda,
                })
                .collect();
            let map = TubularMap::new(entries, h).stage("foliation_tube::build_tubular_map")?;
            let pb = check_pullback(&map, &ray, &cfg.potential).stage("foliation_tube::check_pullback")?;
            out.push(Check::at_most("pullback", pb.max_deviation, PULLBACK));
        }
    }
    Ok(out)
}

pub(super) fn verify(cfg: &RunConfig, out: &Path) -> Result<Vec<Check>, CliError> {
    let checks = verify_checks(cfg)?;
    let mut s = String::from("check,value,threshold,pass\n");
    for c in &checks {
        writeln!(s, "{},{:e},{:e},{}", c.name, c.value, c.threshold, c.pass).unwrap();
    }
    fs::write(out.join("verify.csv"), s)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(checks)
    } else {
        Err(CliError::Verification(format!(
            "{} of {} checks failed: {}",
            failed.len(),
            checks.len(),
            failed.join(", ")
        )))
    }
}
