//! Command pipelines. Every run owns its output directory.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use pshlab::envelope::{
    extract_equilibrium, fixed_point_defect, lelong_check, maximality_residual,
    write_envelope_dir, Backend, EnvelopeResult,
};
use pshlab::geodesic::envelope_slices;
use pshlab::grid::{write_csv, ScalarField};
use pshlab::measure::{ma_mass, reproducing_check, Region};

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Stage};

mod checks;
mod stages;

pub use checks::{verify_checks, Check};

/// What a successful run produced.
#[derive(Debug)]
pub struct RunReport {
    pub command: Command,
    pub out: PathBuf,
    /// Verification rows, empty for the other commands.
    pub checks: Vec<Check>,
}

/// Runs `cfg.command` into `out`. On failure the partial outputs stay and a
/// `FAILED` file names the error.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let command = cfg
        .command
        .ok_or_else(|| CliError::Usage("no command given".into()))?;
    fs::create_dir_all(out)?;
    let _ = fs::remove_file(out.join("FAILED"));
    fs::write(out.join("config.txt"), cfg.to_text())?;
    let result = match command {
        Command::Envelope => envelope(cfg, out).map(|_| Vec::new()),
        Command::Flow => flow(cfg, out).map(|_| Vec::new()),
        Command::Geodesic => stages::geodesic(cfg, out).map(|_| Vec::new()),
        Command::Foliate => stages::foliate(cfg, out).map(|_| Vec::new()),
        Command::Verify => checks::verify(cfg, out),
    };
    match result {
        Ok(checks) => Ok(RunReport {
            command,
            out: out.to_path_buf(),
            checks,
        }),
        Err(e) => {
            fs::write(out.join("FAILED"), format!("{e}\n"))?;
            Err(e)
        }
    }
}

pub(crate) fn write_field(f: &ScalarField<f64>, path: &Path) -> Result<(), CliError> {
    write_csv(f, BufWriter::new(fs::File::create(path)?)).stage("field_grid::write_csv")
}

/// `dV_φ`-mass of `B_λ` and the largest `|M_k|/M_0`, the latter only for n = 1.
pub(crate) fn mass_of(cfg: &RunConfig, e: &EnvelopeResult<f64>) -> Result<(f64, Option<f64>), CliError> {
    if cfg.potential.dim() == 1 {
        let m = reproducing_check(&cfg.potential, e, cfg.k_max).stage("ma_measure::reproducing_check")?;
        Ok((m.mass, Some(m.max_ratio())))
    } else {
        let region = Region::Mask {
            grid: *e.grid(),
            mask: e.complement(),
        };
        Ok((ma_mass(&cfg.potential, &region).stage("ma_measure::ma_mass")?, None))
    }
}

pub(crate) fn solve_all(cfg: &RunConfig, lambdas: &[f64]) -> Result<Vec<EnvelopeResult<f64>>, CliError> {
    envelope_slices(&cfg.potential, lambdas, &cfg.grid(), cfg.backend, cfg.tol, cfg.max_iters)
        .stage("envelope_solver::solve")
}

fn envelope(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let &lambda = cfg
        .lambdas
        .first()
        .ok_or_else(|| CliError::Usage("envelope needs one lambda".into()))?;
    let e = solve_all(cfg, &[lambda])?.remove(0);
    let dir = out.join("envelope");
    write_envelope_dir(&e, &dir).stage("envelope_solver::write")?;

    let (mass, ratio) = mass_of(cfg, &e)?;
    let mut s = String::new();
    writeln!(s, "lambda = {lambda:e}").unwrap();
    writeln!(s, "backend = {}", e.backend).unwrap();
    writeln!(s, "iterations = {}", e.iterations).unwrap();
    writeln!(s, "residual = {:e}", e.residual).unwrap();
    writeln!(s, "mass = {mass:e}").unwrap();
    if let Some(r) = ratio {
        writeln!(s, "max_moment_ratio = {r:e}").unwrap();
    }
    if cfg.potential.dim() == 1 {
        let h = e.grid().spacing();
        let res = maximality_residual(&e).stage("envelope_solver::maximality_residual")?;
        writeln!(s, "maximality_residual = {res:e}").unwrap();
        writeln!(s, "maximality_threshold = {:e}", 10.0 * h).unwrap();
        let lelong = lelong_check(&e, 0.05).stage("envelope_solver::lelong_check")?;
        writeln!(s, "lelong_slope = {:e}", lelong.slope).unwrap();
        if e.backend == Backend::Grid {
            let d = fixed_point_defect(&e).stage("envelope_solver::fixed_point_defect")?;
            writeln!(s, "fixed_point_defect = {d:e}").unwrap();
        }
    }
    fs::write(dir.join("summary.txt"), s)?;
    Ok(())
}

fn flow(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    if cfg.lambdas.is_empty() {
        return Err(CliError::Usage("flow needs a non-empty lambda list".into()));
    }
    let mut lambdas = cfg.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let results = solve_all(cfg, &lambdas)?;
    let dir = out.join("flow");
    fs::create_dir_all(&dir)?;

    let mut table = String::from("lambda,mass,max_moment_ratio\n");
    for (k, e) in results.iter().enumerate() {
        let (_, boundary) = extract_equilibrium(e, e.coincidence_tol).stage("envelope_solver::extract_equilibrium")?;
        boundary
            .write_csv(BufWriter::new(fs::File::create(dir.join(format!("boundary_{k:03}.csv")))?))
            .stage("envelope_solver::extract_equilibrium")?;
        let (mass, ratio) = mass_of(cfg, e)?;
        let ratio = ratio.map_or("nan".to_string(), |r| format!("{r:e}"));
        writeln!(table, "{:e},{mass:e},{ratio}", e.lambda).unwrap();
    }
    fs::write(dir.join("mass.csv"), table)?;

    let violations = inclusion_violations(&results);
    fs::write(
        dir.join("inclusion.txt"),
        format!("pairs = {}\nviolations = {violations}\n", results.len().saturating_sub(1)),
    )?;
    Ok(())
}

/// Nodes of `B_λ` missing from `B_μ`, summed over consecutive λ < μ.
pub(crate) fn inclusion_violations(results: &[EnvelopeResult<f64>]) -> usize {
    results
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].complement(), w[1].complement());
            a.iter().zip(&b).filter(|(&x, &y)| x && !y).count()
        })
        .sum()
}
