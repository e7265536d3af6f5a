//! Plain-text file formats.
//!
//! Match file: one correspondence per line, `x1 y1 x2 y2`.
//!
//! Instance file: a header line `n d epsilon` (number of data points,
//! parameter dimension, inlier threshold) followed by one line per row,
//! `group_index b a_1 ... a_d`, with 0-based group indices.
//!
//! In both formats fields are whitespace-separated, blank lines are
//! ignored and `#` starts a comment that runs to the end of the line.

use super::{PointMatch, ProblemInstance, ResidualSystem};
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Yields `(1-based line number, fields)` for every non-empty line.
fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, Vec<String>)>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        let body = line.split('#').next().unwrap_or("");
        let fields: Vec<String> = body.split_whitespace().map(str::to_owned).collect();
        (!fields.is_empty()).then_some(Ok((i + 1, fields)))
    })
}

fn number(line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(line, format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("`{field}` is not finite")));
    }
    Ok(v)
}

fn count(line: usize, field: &str, what: &str) -> Result<usize> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("{what} `{field}` is not a non-negative integer")))
}

pub fn parse_matches<R: BufRead>(reader: R) -> Result<Vec<PointMatch>> {
    let mut out = Vec::new();
    for item in content_lines(reader) {
        let (line, fields) = item?;
        if fields.len() != 4 {
            return Err(parse_err(
                line,
                format!("expected 4 values `x1 y1 x2 y2`, found {}", fields.len()),
            ));
        }
        let v: Vec<f64> = fields
            .iter()
            .map(|f| number(line, f))
            .collect::<Result<_>>()?;
        out.push(PointMatch::new(v[0], v[1], v[2], v[3]));
    }
    Ok(out)
}

pub fn read_matches(path: impl AsRef<Path>) -> Result<Vec<PointMatch>> {
    parse_matches(BufReader::new(File::open(path)?))
}

pub fn write_matches<W: Write>(mut w: W, matches: &[PointMatch]) -> Result<()> {
    for m in matches {
        writeln!(w, "{} {} {} {}", m.p.x, m.p.y, m.q.x, m.q.y)?;
    }
    Ok(())
}

pub fn parse_instance<R: BufRead>(reader: R) -> Result<ProblemInstance> {
    let mut lines = content_lines(reader);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header `n d epsilon`"))??;
    if header.len() != 3 {
        return Err(parse_err(hline, "header must be `n d epsilon`"));
    }
    let n = count(hline, &header[0], "point count")?;
    let d = count(hline, &header[1], "dimension")?;
    let epsilon = number(hline, &header[2])?;
    if n == 0 || d == 0 {
        return Err(parse_err(hline, "point count and dimension must be positive"));
    }
    if epsilon < 0.0 {
        return Err(parse_err(hline, "epsilon must be non-negative"));
    }

    let mut rows = Vec::new();
    let mut groups = vec![Vec::new(); n];
    for item in lines {
        let (line, fields) = item?;
        if fields.len() != d + 2 {
            return Err(parse_err(
                line,
                format!("expected {} values `group b a_1..a_{d}`, found {}", d + 2, fields.len()),
            ));
        }
        let g = count(line, &fields[0], "group index")?;
        if g >= n {
            return Err(parse_err(line, format!("group index {g} out of range 0..{n}")));
        }
        let b = number(line, &fields[1])?;
        let a = fields[2..]
            .iter()
            .map(|f| number(line, f))
            .collect::<Result<Vec<_>>>()?;
        groups[g].push(rows.len());
        rows.push((a, b));
    }
    if let Some(g) = groups.iter().position(Vec::is_empty) {
        return Err(parse_err(hline, format!("group {g} has no rows")));
    }
    let system = ResidualSystem::new(d, rows, groups)?;
    ProblemInstance::new(system, epsilon, None)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    parse_instance(BufReader::new(File::open(path)?))
}

pub fn write_instance<W: Write>(mut w: W, system: &ResidualSystem, epsilon: f64) -> Result<()> {
    writeln!(w, "{} {} {}", system.num_groups(), system.dim(), epsilon)?;
    for j in 0..system.num_rows() {
        write!(w, "{} {}", system.group_of(j), system.offset(j))?;
        for a in system.row(j) {
            write!(w, " {a}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
