//! Parsing of refinement rules and exact fraction lists.
//!
//! Fractions are read as integer pairs and never pass through floats.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use udk_core::refine::{ls_rule, pisot_rule, RefinementRule};

use crate::error::{CliError, CliResult};

fn parse_err(position: usize, message: impl Into<String>) -> CliError {
    CliError::Parse { position, message: message.into() }
}

/// `p/q` or an integer `p`; `offset` is the byte position of `s` in the input.
pub fn parse_fraction(s: &str, offset: usize) -> CliResult<BigRational> {
    let lead = s.len() - s.trim_start().len();
    let t = s.trim();
    let at = offset + lead;
    if t.is_empty() {
        return Err(parse_err(at, "empty fraction"));
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, Some((b, a.len() + 1))),
        None => (t, None),
    };
    let p: BigInt = num.trim().parse().map_err(|_| parse_err(at, format!("bad numerator `{num}`")))?;
    let q: BigInt = match den {
        Some((b, shift)) => b.trim().parse().map_err(|_| parse_err(at + shift, format!("bad denominator `{b}`")))?,
        None => BigInt::from(1),
    };
    if q.is_zero() {
        return Err(parse_err(at + den.map_or(0, |d| d.1), "zero denominator"));
    }
    Ok(BigRational::new(p, q))
}

/// Comma-separated fractions.
pub fn parse_fraction_list(s: &str, offset: usize) -> CliResult<Vec<BigRational>> {
    let mut out = Vec::new();
    let mut pos = offset;
    for part in s.split(',') {
        out.push(parse_fraction(part, pos)?);
        pos += part.len() + 1;
    }
    Ok(out)
}

/// Comma-separated positive integers.
pub fn parse_u32_list(s: &str, offset: usize) -> CliResult<Vec<u32>> {
    let mut out = Vec::new();
    let mut pos = offset;
    for part in s.split(',') {
        let lead = part.len() - part.trim_start().len();
        let v: u32 =
            part.trim().parse().map_err(|_| parse_err(pos + lead, format!("bad integer `{}`", part.trim())))?;
        out.push(v);
        pos += part.len() + 1;
    }
    Ok(out)
}

/// `"1/4,1/4,1/2"`, `"ls:L,S"` or `"pisot:a1,a2,..."`.
pub fn parse_rho(spec: &str) -> CliResult<RefinementRule> {
    if let Some(rest) = spec.strip_prefix("ls:") {
        let v = parse_u32_list(rest, 3)?;
        if v.len() != 2 {
            return Err(parse_err(3, format!("ls needs 2 integers, got {}", v.len())));
        }
        return Ok(ls_rule(v[0], v[1])?);
    }
    if let Some(rest) = spec.strip_prefix("pisot:") {
        return Ok(pisot_rule(&parse_u32_list(rest, 6)?)?);
    }
    Ok(RefinementRule::from_rationals(parse_fraction_list(spec, 0)?)?)
}
