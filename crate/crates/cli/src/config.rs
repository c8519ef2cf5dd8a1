//! `key = value` run configuration with an optional `[potential]` section.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use pshlab::envelope::Backend;
use pshlab::grid::{build_grid, CoordinateStyle, GridSpec};
use pshlab::potential::{builtin, validate_strict_psh, Potential, Symmetry, BUILTIN_NAMES};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Envelope,
    Flow,
    Geodesic,
    Foliate,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Envelope => "envelope",
            Command::Flow => "flow",
            Command::Geodesic => "geodesic",
            Command::Foliate => "foliate",
            Command::Verify => "verify",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "envelope" => Command::Envelope,
            "flow" => Command::Flow,
            "geodesic" => Command::Geodesic,
            "foliate" => Command::Foliate,
            "verify" => Command::Verify,
            other => return Err(format!("unknown command {other:?}")),
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Option<Command>,
    /// Builtin name when the potential came from one.
    pub builtin: Option<String>,
    pub potential: Potential<f64>,
    pub resolution: usize,
    pub radius: f64,
    pub style: CoordinateStyle,
    pub backend: Backend,
    pub lambdas: Vec<f64>,
    pub cutoff: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub n_lambda: usize,
    pub n_t: usize,
    pub leaf_angles: usize,
    pub leaf_steps: usize,
    pub delta: f64,
    pub k_max: usize,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn grid(&self) -> GridSpec<f64> {
        build_grid(self.potential.dim(), self.resolution, self.radius, self.style)
            .expect("grid parameters are validated by parse_config")
    }

    /// Canonical text: every key with its effective value, potential as terms.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        if let Some(c) = self.command {
            writeln!(s, "command = {}", c.name()).unwrap();
        }
        writeln!(s, "resolution = {}", self.resolution).unwrap();
        writeln!(s, "radius = {:e}", self.radius).unwrap();
        let style = match self.style {
            CoordinateStyle::Cartesian => "cartesian",
            CoordinateStyle::LogRadial => "log-radial",
        };
        writeln!(s, "style = {style}").unwrap();
        writeln!(s, "backend = {}", self.backend).unwrap();
        writeln!(s, "lambda = {}", list(&self.lambdas)).unwrap();
        if let Some(c) = self.cutoff {
            writeln!(s, "cutoff = {c:e}").unwrap();
        }
        writeln!(s, "tol = {:e}", self.tol).unwrap();
        writeln!(s, "max_iters = {}", self.max_iters).unwrap();
        writeln!(s, "n_lambda = {}", self.n_lambda).unwrap();
        writeln!(s, "n_t = {}", self.n_t).unwrap();
        writeln!(s, "leaf_angles = {}", self.leaf_angles).unwrap();
        writeln!(s, "leaf_steps = {}", self.leaf_steps).unwrap();
        writeln!(s, "delta = {:e}", self.delta).unwrap();
        writeln!(s, "k_max = {}", self.k_max).unwrap();
        s.push_str("[potential]\n");
        s.push_str(&self.potential.to_text());
        s
    }
}

fn err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config {
        line,
        msg: msg.into(),
    }
}

fn number<T: FromStr>(v: &str, key: &str, line: usize) -> Result<T, CliError> {
    v.parse().map_err(|_| err(line, format!("{key}: cannot parse {v:?}")))
}

fn positive(v: f64, key: &str, line: usize) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(line, format!("{key} must be positive, got {v}")))
    }
}

fn number_list(v: &str, key: &str, line: usize) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| number(s, key, line))
        .collect()
}

/// Parses and validates a configuration. Line numbers in errors are 1-based.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut body = text;
    let mut section = None;
    if let Some(pos) = text.find("[potential]") {
        let line = text[..pos].lines().count() + 1;
        body = &text[..pos];
        section = Some((&text[pos + "[potential]".len()..], line));
    }

    let mut command = None;
    let mut name: Option<(String, usize)> = None;
    let mut resolution: Option<usize> = None;
    let mut radius = 1.0f64;
    let mut style = CoordinateStyle::Cartesian;
    let mut backend: Option<(Backend, usize)> = None;
    let mut lambdas: Option<(Vec<f64>, usize)> = None;
    let mut cutoff: Option<(f64, usize)> = None;
    let mut tol = 1e-10;
    let mut max_iters = 200_000usize;
    let mut n_lambda = 64usize;
    let mut n_t = 2048usize;
    let mut leaf_angles = 8usize;
    let mut leaf_steps = 2048usize;
    let mut delta = 5e-3;
    let mut k_max = 4usize;
    let mut out = None;
    let mut threads = None;
    let mut grid_line = 1;

    for (k, raw) in body.lines().enumerate() {
        let ln = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(a, b)| (a.trim(), b.trim()))
            .ok_or_else(|| err(ln, format!("expected `key = value`, got {line:?}")))?;
        match key {
            "command" => command = Some(value.parse().map_err(|m: String| err(ln, m))?),
            "potential" => name = Some((value.to_string(), ln)),
            "resolution" => {
                resolution = Some(number(value, key, ln)?);
                grid_line = ln;
            }
            "radius" => {
                radius = positive(number(value, key, ln)?, key, ln)?;
                grid_line = ln;
            }
            "style" => style = value.parse().map_err(|e: pshlab::Error| err(ln, e.to_string()))?,
            "backend" => backend = Some((value.parse().map_err(|_| err(ln, format!("unknown backend {value:?}")))?, ln)),
            "lambda" => lambdas = Some((number_list(value, key, ln)?, ln)),
            "lambda_sweep" => {
                let v = number_list(value, key, ln)?;
                if v.len() != 3 || v[2] < 1.0 || v[2].fract() != 0.0 {
                    return Err(err(ln, "lambda_sweep expects `start, end, count`"));
                }
                let n = v[2] as usize;
                let sweep = (0..n)
                    .map(|i| if n == 1 { v[0] } else { v[0] + (v[1] - v[0]) * i as f64 / (n - 1) as f64 })
                    .collect();
                lambdas = Some((sweep, ln));
            }
            "cutoff" => cutoff = Some((positive(number(value, key, ln)?, key, ln)?, ln)),
            "tol" => tol = positive(number(value, key, ln)?, key, ln)?,
            "max_iters" => max_iters = number(value, key, ln)?,
            "n_lambda" => n_lambda = number(value, key, ln)?,
            "n_t" => n_t = number(value, key, ln)?,
            "leaf_angles" => leaf_angles = number(value, key, ln)?,
            "leaf_steps" => leaf_steps = number(value, key, ln)?,
            "delta" => delta = positive(number(value, key, ln)?, key, ln)?,
            "k_max" => k_max = number(value, key, ln)?,
            "out" => out = Some(PathBuf::from(value)),
            "threads" => threads = Some(number(value, key, ln)?),
            other => return Err(err(ln, format!("unknown key {other:?}"))),
        }
    }

    let (potential, pot_line, builtin_name) = match (name, section) {
        (Some(_), Some((_, line))) => {
            return Err(err(line, "give either `potential = <builtin>` or a [potential] section, not both"))
        }
        (Some((n, line)), None) => {
            let p = builtin::<f64>(&n).ok_or_else(|| {
                err(line, format!("unknown builtin {n:?}; expected one of {}", BUILTIN_NAMES.join(", ")))
            })?;
            (p, line, Some(n))
        }
        (None, Some((terms, line))) => {
            let p = Potential::parse_terms(terms, line).map_err(|e| match e {
                pshlab::Error::Parse { line, msg } => err(line, msg),
                other => err(line, other.to_string()),
            })?;
            (p, line, None)
        }
        (None, None) => return Err(err(1, "no potential: set `potential = <builtin>` or add a [potential] section")),
    };

    // C^2 grids carry resolution^4 nodes
    let resolution = resolution.unwrap_or(if potential.dim() == 1 { 128 } else { 16 });
    let grid = build_grid(potential.dim(), resolution, radius, style).map_err(|e| err(grid_line, e.to_string()))?;
    let cert = validate_strict_psh(&potential, &grid).map_err(|e| err(pot_line, e.to_string()))?;
    if !(cert.min_eigenvalue > 0.0) {
        let at = &cert.location[..potential.dim() * 2];
        return Err(err(
            pot_line,
            format!("potential is not strictly psh: smallest eigenvalue {:e} at {at:?}", cert.min_eigenvalue),
        ));
    }

    let backend = match backend {
        Some((b, line)) => {
            let ok = match b {
                Backend::Grid => potential.dim() == 1,
                Backend::Radial => potential.dim() == 1 && potential.symmetry() == Symmetry::Radial,
                Backend::Reinhardt => potential.dim() == 2 && potential.symmetry() != Symmetry::General,
            };
            if !ok {
                return Err(err(line, format!("backend {b} does not apply to this potential")));
            }
            b
        }
        None => match (potential.dim(), potential.symmetry()) {
            (1, Symmetry::Radial) => Backend::Radial,
            (1, _) => Backend::Grid,
            (_, Symmetry::General) => return Err(err(pot_line, "general potentials in C^2 have no backend")),
            _ => Backend::Reinhardt,
        },
    };

    let (lambdas, lambda_line) = lambdas.unwrap_or((vec![0.25], 1));
    if let Some(&bad) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(err(lambda_line, format!("lambda must be non-negative, got {bad}")));
    }
    if let Some((c, line)) = cutoff {
        if let Some(&l) = lambdas.iter().find(|&&l| l >= c) {
            return Err(err(line.max(lambda_line), format!("lambda exceeds cutoff: {l} >= {c}")));
        }
    }
    if n_lambda < 2 || n_t < 2 || leaf_steps < 4 || resolution < 4 {
        return Err(err(grid_line, "resolution, n_lambda, n_t and leaf_steps are too small"));
    }

    Ok(RunConfig {
        command,
        builtin: builtin_name,
        potential,
        resolution,
        radius,
        style,
        backend,
        lambdas,
        cutoff: cutoff.map(|c| c.0),
        tol,
        max_iters,
        n_lambda,
        n_t,
        leaf_angles,
        leaf_steps,
        delta,
        k_max,
        out,
        threads,
    })
}
