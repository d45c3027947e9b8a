//! Trace CSV: one row per outer iteration, floats with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inner::DirectionType;
use crate::solvers::{Trace, TraceRecord};

pub const HEADER: &str = "k,f,gnorm,delta,oracle_units,wall_ns,dtype,eta,inner_t,ls_backtracks";

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn emit_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in &trace.records {
        let delta = r.delta.map(float).unwrap_or_default();
        let dtype = r.dtype.map_or("n/a", DirectionType::as_str);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.k,
            float(r.f),
            float(r.gnorm),
            delta,
            r.oracle_units,
            r.wall_ns,
            dtype,
            float(r.eta),
            r.inner_t,
            r.ls_backtracks
        );
    }
    out
}

pub fn write_csv(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, emit_csv(trace)).map_err(|e| Error::io(path, e))
}

fn field<T: std::str::FromStr>(line: usize, name: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name} value {v:?}"),
    })
}

pub fn parse_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {HEADER}"),
            })
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                line: n,
                message: format!("expected 10 columns, found {}", cols.len()),
            });
        }
        let dtype = match cols[6] {
            "n/a" => None,
            s => Some(DirectionType::parse(s).ok_or_else(|| Error::Parse {
                line: n,
                message: format!("bad dtype {s:?}"),
            })?),
        };
        records.push(TraceRecord {
            k: field(n, "k", cols[0])?,
            f: field(n, "f", cols[1])?,
            gnorm: field(n, "gnorm", cols[2])?,
            delta: if cols[3].is_empty() {
                None
            } else {
                Some(field(n, "delta", cols[3])?)
            },
            oracle_units: field(n, "oracle_units", cols[4])?,
            wall_ns: field(n, "wall_ns", cols[5])?,
            dtype,
            eta: field(n, "eta", cols[7])?,
            inner_t: field(n, "inner_t", cols[8])?,
            ls_backtracks: field(n, "ls_backtracks", cols[9])?,
        });
    }
    Ok(records)
}

/// The CSV with the `wall_ns` column removed, for reproducibility comparisons.
pub fn without_wall_ns(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() > 5 {
                [&cols[..5], &cols[6..]].concat().join(",")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
