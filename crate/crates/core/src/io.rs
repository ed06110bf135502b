//! CSV emission and parsing for the simulation outputs.
//!
//! Schemas:
//!
//! * coupling profile: `n,f`
//! * transition rates: `n,up,stay`
//! * distribution snapshots: `cycle,n,prob`
//! * moment series: `cycle,mean,variance,relvar,argmax,pmax,leak`
//! * coupling-zero table: `n0,eta,root_index`
//! * trapping numbers: `n`
//! * ensemble comparison: `cycle,tv_distance`
//! * initial distribution input: `n,prob`
//!
//! Floats are written with 9 significant digits (override with the
//! `SIDEBAND_FLOAT_DIGITS` environment variable); with a fixed summation
//! order that makes outputs byte-stable across runs and platforms.

use std::io::Write;

use crate::engine::{MomentRecord, MomentSeries, NumberDistribution};
use crate::error::{Error, Result};
use crate::rates::TransitionRates;
use crate::specfun::CouplingProfile;
use crate::trapping::CouplingZeroEntry;

/// Environment variable overriding the emitted float precision.
pub const FLOAT_DIGITS_ENV: &str = "SIDEBAND_FLOAT_DIGITS";

const DEFAULT_FLOAT_DIGITS: usize = 9;

fn float_digits() -> usize {
    std::env::var(FLOAT_DIGITS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .map(|d| d.clamp(1, 17))
        .unwrap_or(DEFAULT_FLOAT_DIGITS)
}

/// Render a float with the configured number of significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    format!("{:.*e}", float_digits() - 1, x)
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_float(v),
        None => "nan".into(),
    }
}

pub fn write_coupling_csv<W: Write + ?Sized>(w: &mut W, profile: &CouplingProfile) -> Result<()> {
    writeln!(w, "n,f")?;
    for (n, &f) in profile.values().iter().enumerate() {
        writeln!(w, "{n},{}", fmt_float(f))?;
    }
    Ok(())
}

pub fn write_rates_csv<W: Write + ?Sized>(w: &mut W, rates: &TransitionRates) -> Result<()> {
    writeln!(w, "n,up,stay")?;
    for n in 0..rates.len() {
        writeln!(
            w,
            "{n},{},{}",
            fmt_float(rates.up()[n]),
            fmt_float(rates.stay()[n])
        )?;
    }
    Ok(())
}

pub fn write_snapshots_csv<W: Write + ?Sized>(
    w: &mut W,
    snapshots: &[(usize, NumberDistribution)],
) -> Result<()> {
    writeln!(w, "cycle,n,prob")?;
    for (cycle, dist) in snapshots {
        for (n, &p) in dist.probs().iter().enumerate() {
            writeln!(w, "{cycle},{n},{}", fmt_float(p))?;
        }
    }
    Ok(())
}

pub fn write_moments_csv<W: Write + ?Sized>(w: &mut W, series: &MomentSeries) -> Result<()> {
    writeln!(w, "cycle,mean,variance,relvar,argmax,pmax,leak")?;
    for r in series {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.cycle,
            fmt_float(r.mean),
            fmt_float(r.variance),
            fmt_opt(r.relvar),
            r.argmax,
            fmt_float(r.pmax),
            fmt_float(r.leak)
        )?;
    }
    Ok(())
}

pub fn write_fig5_csv<W: Write + ?Sized>(w: &mut W, table: &[CouplingZeroEntry]) -> Result<()> {
    writeln!(w, "n0,eta,root_index")?;
    for entry in table {
        writeln!(
            w,
            "{},{},{}",
            entry.n0,
            fmt_float(entry.eta),
            entry.root_index
        )?;
    }
    Ok(())
}

pub fn write_trapping_numbers_csv<W: Write + ?Sized>(w: &mut W, numbers: &[usize]) -> Result<()> {
    writeln!(w, "n")?;
    for n in numbers {
        writeln!(w, "{n}")?;
    }
    Ok(())
}

pub fn write_comparison_csv<W: Write + ?Sized>(w: &mut W, rows: &[(usize, f64)]) -> Result<()> {
    writeln!(w, "cycle,tv_distance")?;
    for (cycle, tv) in rows {
        writeln!(w, "{cycle},{}", fmt_float(*tv))?;
    }
    Ok(())
}

fn parse_error(line_no: usize, message: impl std::fmt::Display) -> Error {
    Error::Config(format!("csv line {line_no}: {message}"))
}

fn split_csv_line(
    line: &str,
    expected: usize,
    line_no: usize,
) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expected {
        return Err(parse_error(
            line_no,
            format!("expected {expected} fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

fn parse_field<T: std::str::FromStr>(field: &str, line_no: usize, name: &str) -> Result<T> {
    field
        .trim()
        .parse::<T>()
        .map_err(|_| parse_error(line_no, format!("invalid {name}: {field:?}")))
}

fn check_header(text: &str, expected: &str) -> Result<()> {
    match text.lines().next() {
        Some(h) if h.trim() == expected => Ok(()),
        other => Err(Error::Config(format!(
            "expected header {expected:?}, found {other:?}"
        ))),
    }
}

/// Parse `n,f` back into the value table.
pub fn read_coupling_csv(text: &str) -> Result<Vec<f64>> {
    check_header(text, "n,f")?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv_line(line, 2, i + 1)?;
        let n: usize = parse_field(fields[0], i + 1, "n")?;
        if n != values.len() {
            return Err(parse_error(i + 1, format!("levels out of order at n = {n}")));
        }
        values.push(parse_field(fields[1], i + 1, "f")?);
    }
    Ok(values)
}

/// Parse `n,up,stay` into (up, stay) tables.
pub fn read_rates_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    check_header(text, "n,up,stay")?;
    let mut up = Vec::new();
    let mut stay = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv_line(line, 3, i + 1)?;
        let n: usize = parse_field(fields[0], i + 1, "n")?;
        if n != up.len() {
            return Err(parse_error(i + 1, format!("levels out of order at n = {n}")));
        }
        up.push(parse_field(fields[1], i + 1, "up")?);
        stay.push(parse_field(fields[2], i + 1, "stay")?);
    }
    Ok((up, stay))
}

/// Parse `cycle,n,prob` into per-checkpoint probability tables.
pub fn read_snapshots_csv(text: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    check_header(text, "cycle,n,prob")?;
    let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv_line(line, 3, i + 1)?;
        let cycle: usize = parse_field(fields[0], i + 1, "cycle")?;
        let n: usize = parse_field(fields[1], i + 1, "n")?;
        let p: f64 = parse_field(fields[2], i + 1, "prob")?;
        if out.last().map(|(c, _)| *c) != Some(cycle) {
            out.push((cycle, Vec::new()));
        }
        let probs = &mut out.last_mut().unwrap().1;
        if n != probs.len() {
            return Err(parse_error(i + 1, format!("levels out of order at n = {n}")));
        }
        probs.push(p);
    }
    Ok(out)
}

/// Parse the moment-series schema back into records.
pub fn read_moments_csv(text: &str) -> Result<MomentSeries> {
    check_header(text, "cycle,mean,variance,relvar,argmax,pmax,leak")?;
    let mut series = MomentSeries::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv_line(line, 7, i + 1)?;
        let relvar: f64 = parse_field(fields[3], i + 1, "relvar")?;
        series.push(MomentRecord {
            cycle: parse_field(fields[0], i + 1, "cycle")?,
            mean: parse_field(fields[1], i + 1, "mean")?,
            variance: parse_field(fields[2], i + 1, "variance")?,
            relvar: if relvar.is_nan() { None } else { Some(relvar) },
            argmax: parse_field(fields[4], i + 1, "argmax")?,
            pmax: parse_field(fields[5], i + 1, "pmax")?,
            leak: parse_field(fields[6], i + 1, "leak")?,
        });
    }
    Ok(series)
}

/// Parse an `n,prob` distribution file (used for explicit initial states).
pub fn read_distribution_csv(text: &str) -> Result<Vec<f64>> {
    check_header(text, "n,prob")?;
    let mut probs = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv_line(line, 2, i + 1)?;
        let n: usize = parse_field(fields[0], i + 1, "n")?;
        if n != probs.len() {
            return Err(parse_error(i + 1, format!("levels out of order at n = {n}")));
        }
        probs.push(parse_field(fields[1], i + 1, "prob")?);
    }
    Ok(probs)
}

/// Parse `n0,eta,root_index` back into table entries.
pub fn read_fig5_csv(text: &str) -> Result<Vec<CouplingZeroEntry>> {
    check_header(text, "n0,eta,root_index")?;
    let mut table = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv_line(line, 3, i + 1)?;
        table.push(CouplingZeroEntry {
            n0: parse_field(fields[0], i + 1, "n0")?,
            eta: parse_field(fields[1], i + 1, "eta")?,
            root_index: parse_field(fields[2], i + 1, "root_index")?,
        });
    }
    Ok(table)
}
