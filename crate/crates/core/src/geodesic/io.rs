use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::{assemble_geodesic_with_slack, hamiltonian, GeodesicRay, DEFAULT_SLACK};
use crate::envelope::read_key_values;
use crate::error::{Error, Result};
use crate::grid::{read_csv, write_csv, ScalarField};
use crate::scalar::Real;

fn list<T: Real>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| format!("{:e}", x.to_f64_lossy()))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list<T: Real>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim().parse::<f64>().map(T::lit).map_err(|_| Error::Parse {
                line: 0,
                msg: format!("bad entry {v:?} in {key}"),
            })
        })
        .collect()
}

/// Writes metadata, the slice family and the `u`, `H` matrices (rows are
/// domain nodes, columns are t nodes).
pub fn write_ray<T: Real>(ray: &GeodesicRay<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("slices"))?;
    let meta = format!(
        "grid = {}\ncutoff = {:e}\nlambdas = {}\nt_grid = {}\n",
        ray.grid.header(),
        ray.cutoff.to_f64_lossy(),
        list(&ray.lambdas),
        list(&ray.t_grid)
    );
    fs::write(dir.join("meta.txt"), meta)?;
    for (k, s) in ray.slices.iter().enumerate() {
        let f = fs::File::create(dir.join("slices").join(format!("a_{k:03}.csv")))?;
        write_csv(s, BufWriter::new(f))?;
    }
    write_csv(&ray.pole, BufWriter::new(fs::File::create(dir.join("pole.csv"))?))?;
    let h = hamiltonian(ray)?;
    let mut fu = BufWriter::new(fs::File::create(dir.join("u.csv"))?);
    let mut fh = BufWriter::new(fs::File::create(dir.join("h.csv"))?);
    let header = format!("node,{}\n", list(&ray.t_grid));
    fu.write_all(header.as_bytes())?;
    fh.write_all(header.as_bytes())?;
    for i in 0..ray.grid.len() {
        if ray.lines[i].is_none() {
            continue;
        }
        write!(fu, "{i}")?;
        write!(fh, "{i}")?;
        for &t in &ray.t_grid {
            write!(fu, ",{:e}", ray.u(i, t).to_f64_lossy())?;
            write!(fh, ",{:e}", h.at(i, t).unwrap().to_f64_lossy())?;
        }
        writeln!(fu)?;
        writeln!(fh)?;
    }
    fu.flush()?;
    fh.flush()?;
    Ok(())
}

/// Reads a ray written by [`write_ray`], reassembling `u` from the slices.
pub fn read_ray<T: Real>(dir: &Path) -> Result<GeodesicRay<T>> {
    let meta = read_key_values(&fs::read_to_string(dir.join("meta.txt"))?)?;
    let find = |key: &str| -> Result<&str> {
        meta.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("meta.txt lacks {key}"),
            })
    };
    let cutoff = parse_list::<T>(find("cutoff")?, "cutoff")?[0];
    let lambdas = parse_list::<T>(find("lambdas")?, "lambdas")?;
    let t_grid = parse_list::<T>(find("t_grid")?, "t_grid")?;
    let slices = (0..lambdas.len())
        .map(|k| {
            let f = fs::File::open(dir.join("slices").join(format!("a_{k:03}.csv")))?;
            read_csv(BufReader::new(f))
        })
        .collect::<Result<Vec<ScalarField<T>>>>()?;
    let ray = assemble_geodesic_with_slack(slices, &lambdas, &t_grid, cutoff, T::lit(DEFAULT_SLACK))?;
    let pole = read_csv(BufReader::new(fs::File::open(dir.join("pole.csv"))?))?;
    ray.with_pole(pole)
}
