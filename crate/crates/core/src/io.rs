//! Plain-text interchange files.
//!
//! * Z sequence: one value per line, first line `0`. Blank lines and lines
//!   starting with `#` are ignored.
//! * Estimate: `# n=<n> M=<M> seed=<seed>` then `k,x_left,x_right,f_hat`.
//! * Trajectory: `# n=<n> T_n=<T_n> truncated=<0|1>` then `y,L,R`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::estimate::PiecewiseDensity;
use crate::simulate::{BranchSequence, SiteCounts};

pub fn write_z<W: Write + ?Sized>(z: &BranchSequence, w: &mut W) -> Result<()> {
    for v in z.values() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Parses a Z file. Values must be nonnegative integers; large counts
/// written in float notation (`1e300`) are accepted if integral.
pub fn read_z<R: BufRead>(r: R) -> Result<BranchSequence> {
    let mut values = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let v: f64 = text.parse().map_err(|_| {
            Error::Format(format!(
                "line {}: expected a count, got {text:?}",
                lineno + 1
            ))
        })?;
        values.push(v);
    }
    BranchSequence::new(values)
}

/// Header fields of an estimate file; `seed` is absent for data that did
/// not come from a seeded simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimateHeader {
    pub n: usize,
    pub m: usize,
    pub seed: Option<u64>,
}

pub fn write_estimate<W: Write + ?Sized>(
    est: &PiecewiseDensity,
    header: EstimateHeader,
    w: &mut W,
) -> Result<()> {
    let seed = header
        .seed
        .map_or_else(|| "none".to_string(), |s| s.to_string());
    writeln!(w, "# n={} M={} seed={seed}", header.n, header.m)?;
    writeln!(w, "k,x_left,x_right,f_hat")?;
    let m = est.order();
    for (k, c) in est.coeffs().iter().enumerate() {
        let (left, right) = if k == m {
            (1.0, 1.0)
        } else {
            (k as f64 / m as f64, (k + 1) as f64 / m as f64)
        };
        writeln!(w, "{k},{left},{right},{c}")?;
    }
    Ok(())
}

/// Reads an estimate file back into its header and coefficients.
pub fn read_estimate<R: BufRead>(r: R) -> Result<(EstimateHeader, PiecewiseDensity)> {
    let mut lines = r.lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    let mut header = EstimateHeader {
        n: 0,
        m: 0,
        seed: None,
    };
    let fields = first
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("estimate file must start with a `#` header".into()))?;
    for field in fields.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header field {field:?}")))?;
        let parse = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| Error::Format(format!("bad header value {field:?}")))
        };
        match key {
            "n" => header.n = parse(value)? as usize,
            "M" => header.m = parse(value)? as usize,
            "seed" if value == "none" => header.seed = None,
            "seed" => header.seed = Some(parse(value)?),
            other => return Err(Error::Format(format!("unknown header field {other:?}"))),
        }
    }
    match lines.next().transpose()? {
        Some(l) if l.trim() == "k,x_left,x_right,f_hat" => {}
        _ => {
            return Err(Error::Format(
                "missing `k,x_left,x_right,f_hat` column line".into(),
            ))
        }
    }
    let mut coeffs = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = line
            .rsplit(',')
            .next()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Format(format!("bad estimate row {line:?}")))?;
        coeffs.push(value);
    }
    let est = PiecewiseDensity::new(coeffs)?;
    if est.order() != header.m {
        return Err(Error::Format(format!(
            "header says M={} but the file has {} rows",
            header.m,
            est.coeffs().len()
        )));
    }
    Ok((header, est))
}

pub fn write_trajectory<W: Write + ?Sized>(sc: &SiteCounts, w: &mut W) -> Result<()> {
    writeln!(
        w,
        "# n={} T_n={} truncated={}",
        sc.n(),
        sc.hitting_time(),
        u8::from(sc.truncated())
    )?;
    writeln!(w, "y,L,R")?;
    for y in sc.sites() {
        writeln!(w, "{y},{},{}", sc.left(y), sc.right(y))?;
    }
    Ok(())
}
