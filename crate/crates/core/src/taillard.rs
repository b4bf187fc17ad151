//! Plain-text Taillard instance files.
//!
//! ```text
//! n m [seed upper_bound lower_bound]
//! <matrix>
//! ```
//!
//! The matrix is either `m` lines of `n` values (one line per machine, the
//! usual distribution layout) or `n` lines of `m` values (one per job).
//! Line lengths decide which; for square instances the caller picks.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Infer from line lengths; square matrices are read machine-major.
    #[default]
    Auto,
    MachineMajor,
    JobMajor,
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Orientation::Auto),
            "machine-major" | "machines" => Ok(Orientation::MachineMajor),
            "job-major" | "jobs" => Ok(Orientation::JobMajor),
            _ => Err(Error::arg(format!("unknown orientation `{s}`"))),
        }
    }
}

/// Header metadata kept alongside the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaillardHeader {
    pub n: usize,
    pub m: usize,
    pub seed: Option<u64>,
    pub upper_bound: Option<u64>,
    pub lower_bound: Option<u64>,
}

fn numbers(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line: lineno, message: format!("`{tok}` is not a number") })
        })
        .collect()
}

pub fn parse_taillard(text: &str, orientation: Orientation) -> Result<(TaillardHeader, Instance)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let h = numbers(header, hline)?;
    if h.len() != 2 && h.len() != 5 {
        return Err(Error::Parse { line: hline, message: "header must be `n m` or `n m seed ub lb`".into() });
    }
    let as_count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Parse { line: hline, message: format!("`{v}` is not a positive count") })
        }
    };
    let (n, m) = (as_count(h[0])?, as_count(h[1])?);
    let extra = |k: usize| h.get(k).map(|&v| v as u64);
    let header = TaillardHeader { n, m, seed: extra(2), upper_bound: extra(3), lower_bound: extra(4) };

    let body: Vec<(usize, Vec<f64>)> = lines.map(|(i, l)| numbers(l, i).map(|v| (i, v))).collect::<Result<_>>()?;
    let shape_of = |rows: usize, cols: usize| body.len() == rows && body.iter().all(|(_, r)| r.len() == cols);
    let machine_major = match orientation {
        Orientation::MachineMajor => true,
        Orientation::JobMajor => false,
        Orientation::Auto => shape_of(m, n) || !shape_of(n, m),
    };
    let (rows, cols) = if machine_major { (m, n) } else { (n, m) };
    if body.len() != rows {
        let line = body.last().map_or(hline, |(i, _)| *i);
        return Err(Error::Parse { line, message: format!("expected {rows} matrix lines, found {}", body.len()) });
    }
    if let Some((line, r)) = body.iter().find(|(_, r)| r.len() != cols) {
        return Err(Error::Parse { line: *line, message: format!("expected {cols} values, found {}", r.len()) });
    }
    let p = Array2::from_shape_fn((n, m), |(j, i)| if machine_major { body[i].1[j] } else { body[j].1[i] });
    Ok((header, Instance::makespan(p)?))
}

pub fn load_taillard(path: impl AsRef<Path>, orientation: Orientation) -> Result<Instance> {
    Ok(parse_taillard(&fs::read_to_string(path)?, orientation)?.1)
}

/// Machine-major text with an `n m` header.
pub fn to_taillard_string(inst: &Instance) -> String {
    let mut s = format!("{} {}\n", inst.n(), inst.m());
    for col in inst.p().columns() {
        let line: Vec<String> = col.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn save_taillard(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_taillard_string(inst))?;
    Ok(())
}
