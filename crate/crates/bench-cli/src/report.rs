//! CSV output for sweep results.
//!
//! Reals are written in scientific notation with 17 significant digits, so
//! parsing a file back gives the same `f64` values. Absent values are empty
//! fields.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{BenchError, Result};
use crate::sweep::{sort_results, Preconditioner, SweepResult};

pub const HEADER: [&str; 10] = [
    "gamma",
    "preconditioner",
    "kappa_kkt",
    "iterations",
    "converged",
    "presolve_ms",
    "solve_ms",
    "sigma_min",
    "sigma_max",
    "spi_iterations",
];

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn record(r: &SweepResult) -> [String; 10] {
    [
        format_real(r.gamma),
        r.preconditioner.name().to_string(),
        format_real(r.kappa_kkt),
        r.iterations.to_string(),
        r.converged.to_string(),
        optional(r.presolve_ms, format_real),
        optional(r.solve_ms, format_real),
        optional(r.sigma_min, format_real),
        format_real(r.sigma_max),
        optional(r.spi_iterations, |k| k.to_string()),
    ]
}

/// Writes `results` in canonical order.
pub fn write_csv<W: Write>(results: &[SweepResult], out: W) -> Result<()> {
    let mut rows = results.to_vec();
    sort_results(&mut rows);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in &rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(results: &[SweepResult], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(results, std::io::BufWriter::new(file))
}

pub fn to_csv_string(results: &[SweepResult]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(results, &mut buf)?;
    String::from_utf8(buf).map_err(|e| BenchError::Parse(e.to_string()))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<Option<T>> {
    let raw = rec
        .get(i)
        .ok_or_else(|| BenchError::Parse(format!("missing column {}", HEADER[i])))?;
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse()
        .map(Some)
        .map_err(|_| BenchError::Parse(format!("bad {} value {raw:?}", HEADER[i])))
}

fn required<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    field(rec, i)?.ok_or_else(|| BenchError::Parse(format!("empty {}", HEADER[i])))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepResult>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(HEADER) {
        return Err(BenchError::Parse("unexpected header".into()));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        out.push(SweepResult {
            gamma: required(&rec, 0)?,
            preconditioner: required::<String>(&rec, 1)?.parse::<Preconditioner>()?,
            kappa_kkt: required(&rec, 2)?,
            iterations: required(&rec, 3)?,
            converged: required(&rec, 4)?,
            presolve_ms: field(&rec, 5)?,
            solve_ms: field(&rec, 6)?,
            sigma_min: field(&rec, 7)?,
            sigma_max: required(&rec, 8)?,
            spi_iterations: field(&rec, 9)?,
        });
    }
    Ok(out)
}

pub fn parse_csv_file(path: impl AsRef<Path>) -> Result<Vec<SweepResult>> {
    read_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
        assert_eq!(format_real(1e6), "1.0000000000000000e6");
        assert_eq!(format_real(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn empty_results_give_a_header_only_file() {
        assert_eq!(to_csv_string(&[]).unwrap(), format!("{}\n", HEADER.join(",")));
    }

    #[test]
    fn header_is_checked() {
        assert!(read_csv("a,b\n".as_bytes()).is_err());
    }
}
