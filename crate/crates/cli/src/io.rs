//! Locale-free CSV and JSON encoding of point sets.

use std::io::{Read, Write};

use num_rational::BigRational;
use serde_json::{json, Value};
use udk_core::sequences::PointSet;

use crate::error::{CliError, CliResult};
use crate::rho::parse_fraction;

/// Output encodings for coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Decimal, 17 significant digits.
    Csv,
    /// JSON array of arrays.
    Json,
    /// Exact `p/q` cells.
    Frac,
}

/// Positional decimal with 17 significant digits, enough to round-trip any f64.
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.16e}", x.abs());
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let sign = if x.is_sign_negative() && x != 0.0 { "-" } else { "" };
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else if (exp as usize) < digits.len() - 1 {
        let (a, b) = digits.split_at(exp as usize + 1);
        format!("{a}.{b}")
    } else {
        format!("{digits}{}", "0".repeat(exp as usize + 1 - digits.len()))
    };
    format!("{sign}{body}")
}

pub fn fmt_frac(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn rows(ps: &PointSet, format: Format) -> Vec<Vec<String>> {
    (0..ps.len())
        .map(|i| match (format, ps.point_exact(i)) {
            (Format::Frac, Some(p)) => p.iter().map(fmt_frac).collect(),
            _ => ps.point_f64(i).into_iter().map(fmt17).collect(),
        })
        .collect()
}

pub fn write_points(ps: &PointSet, format: Format, out: &mut dyn Write) -> CliResult<()> {
    match format {
        Format::Json => {
            let v: Vec<Vec<f64>> = (0..ps.len()).map(|i| ps.point_f64(i)).collect();
            writeln!(out, "{}", serde_json::to_string(&v)?)?;
        }
        Format::Frac if !ps.is_exact() => {
            return Err(CliError::Usage("frac output needs an exact point set".into()));
        }
        _ => write_rows(&rows(ps, format), out)?,
    }
    Ok(())
}

pub fn write_rows(rows: &[Vec<String>], out: &mut dyn Write) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the CSV written by [`write_points`]. All-fraction input stays exact;
/// any decimal cell switches the whole set to floats.
pub fn read_points(input: &mut dyn Read, dim: Option<usize>) -> CliResult<PointSet> {
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(input);
    let mut cells: Vec<String> = Vec::new();
    let mut width = dim;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(CliError::Usage(format!("row {} has {} columns, expected {w}", line + 1, rec.len())))
            }
            _ => {}
        }
        cells.extend(rec.iter().map(str::to_string));
    }
    let d = width.ok_or(CliError::Core(udk_core::Error::EmptyPointSet))?;
    let float = cells.iter().any(|c| c.contains(['.', 'e', 'E', 'n', 'N', 'i']));
    if float {
        let v = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if c.contains('/') {
                    Ok(udk_core::sequences::rat_to_f64(&parse_fraction(c, 0)?))
                } else {
                    c.parse::<f64>().map_err(|_| CliError::Parse { position: i, message: format!("bad number `{c}`") })
                }
            })
            .collect::<CliResult<Vec<f64>>>()?;
        Ok(PointSet::float(d, v)?)
    } else {
        let v = cells.iter().map(|c| parse_fraction(c, 0)).collect::<CliResult<Vec<_>>>()?;
        Ok(PointSet::exact(d, v)?)
    }
}

pub fn to_json_line(v: &Value, out: &mut dyn Write) -> CliResult<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

/// JSON has no infinities; they become the string `"inf"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else if x < 0.0 {
        json!("-inf")
    } else {
        Value::Null
    }
}
