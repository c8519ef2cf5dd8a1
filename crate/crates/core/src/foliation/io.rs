use std::io::{BufRead, Write};

use super::{Leaf, LeafSample, TubeEntry, TubularMap};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn num<T: Real>(v: T) -> String {
    format!("{:e}", v.to_f64_lossy())
}

/// Writes `t, Re z, Im z, H` rows (`H` empty where unavailable).
pub fn write_leaf_csv<T: Real, W: Write>(leaf: &Leaf<T>, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# anchor={},{} lambda={} drift={}",
        num(leaf.anchor[0]),
        num(leaf.anchor[1]),
        num(leaf.lambda),
        num(leaf.drift)
    )?;
    writeln!(out, "t,re_z,im_z,h")?;
    for s in &leaf.samples {
        let h = s.h.map(num).unwrap_or_default();
        writeln!(out, "{},{},{},{}", num(s.t), num(s.z[0]), num(s.z[1]), h)?;
    }
    Ok(())
}

fn parse<T: Real>(s: &str, line: usize) -> Result<T> {
    s.trim().parse::<f64>().map(T::lit).map_err(|_| Error::Parse {
        line,
        msg: format!("bad number {s:?}"),
    })
}

/// Reads the samples of a leaf file; positions `x` are rebuilt from `z`.
pub fn read_leaf_csv<T: Real, R: BufRead>(input: R) -> Result<Vec<LeafSample<T>>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("expected 4 columns, found {}", cols.len()),
            });
        }
        let t: T = parse(cols[0], k + 1)?;
        let z = [parse(cols[1], k + 1)?, parse(cols[2], k + 1)?];
        let e = (t / T::lit(2.0)).exp();
        let h = if cols[3].trim().is_empty() {
            None
        } else {
            Some(parse(cols[3], k + 1)?)
        };
        out.push(LeafSample {
            t,
            x: [z[0] / e, z[1] / e],
            z,
            h,
        });
    }
    Ok(out)
}

/// Writes `Re u, Im u, Re T(u), Im T(u), λ` rows.
pub fn write_tubular_csv<T: Real, W: Write>(map: &TubularMap<T>, mut out: W) -> Result<()> {
    writeln!(out, "re_u,im_u,re_t,im_t,lambda")?;
    for e in &map.entries {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(e.u[0]),
            num(e.u[1]),
            num(e.z[0]),
            num(e.z[1]),
            num(e.lambda)
        )?;
    }
    Ok(())
}

pub fn read_tubular_csv<T: Real, R: BufRead>(input: R, spacing: T) -> Result<TubularMap<T>> {
    let mut entries = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("expected 5 columns, found {}", cols.len()),
            });
        }
        let v = cols
            .iter()
            .map(|c| parse::<T>(c, k + 1))
            .collect::<Result<Vec<_>>>()?;
        entries.push(TubeEntry {
            u: [v[0], v[1]],
            z: [v[2], v[3]],
            lambda: v[4],
        });
    }
    TubularMap::new(entries, spacing)
}
