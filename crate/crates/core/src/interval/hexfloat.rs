//! Bit-exact text form of interval endpoints.
//!
//! Endpoints are written as C99 hexadecimal floats (`-0x1.952p+0`), which
//! round-trip exactly. The decimal string written next to them is an
//! outward enclosure meant for humans only; it is never parsed back.

use super::{Interval, IntervalError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HexError {
    #[error("malformed or inexact hexadecimal float {0:?}")]
    Malformed(String),
    #[error("non-finite endpoint {0:?}")]
    NonFinite(String),
    #[error(transparent)]
    Bounds(#[from] IntervalBoundsError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("lower endpoint {lo} exceeds upper endpoint {hi}")]
pub struct IntervalBoundsError {
    pub lo: String,
    pub hi: String,
}

/// Hexadecimal float with trailing zero nibbles trimmed.
pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let dot = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    format!("{sign}0x{lead}{dot}p{e:+}")
}

/// Strict parse: the literal must denote a finite double exactly.
pub fn parse_hex(s: &str) -> Result<f64, HexError> {
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    if body.starts_with(['-', '+']) {
        return Err(HexError::Malformed(s.into()));
    }
    let v = hexf_parse::parse_hexf64(body, false).map_err(|_| HexError::Malformed(s.into()))?;
    if !v.is_finite() {
        return Err(HexError::NonFinite(s.into()));
    }
    Ok(if neg { -v } else { v })
}

/// Parses the two endpoint strings of a serialized interval.
pub fn parse_interval_parts(lo: &str, hi: &str) -> Result<Interval, HexError> {
    let a = parse_hex(lo)?;
    let b = parse_hex(hi)?;
    Interval::new(a, b).map_err(|e| match e {
        IntervalError::InvalidBounds { .. } => HexError::Bounds(IntervalBoundsError {
            lo: lo.into(),
            hi: hi.into(),
        }),
        _ => HexError::Malformed(format!("{lo}, {hi}")),
    })
}

/// Parses `"<lo-hex>,<hi-hex>"`.
pub fn parse_interval(s: &str) -> Result<Interval, HexError> {
    let (lo, hi) = s
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split_once(',')
        .ok_or_else(|| HexError::Malformed(s.into()))?;
    parse_interval_parts(lo, hi)
}

fn exact_integer(x: f64) -> Option<String> {
    (x.fract() == 0.0 && x.abs() < 9.007_199_254_740_992e15).then(|| format!("{}", x as i64))
}

/// Decimal lower bound: exact integers verbatim, otherwise 17 significant
/// digits of a value two ulps below, which stays below `x` after decimal
/// rounding.
fn decimal_down(x: f64) -> String {
    exact_integer(x).unwrap_or_else(|| format!("{:.16e}", x.next_down().next_down()))
}

fn decimal_up(x: f64) -> String {
    exact_integer(x).unwrap_or_else(|| format!("{:.16e}", x.next_up().next_up()))
}

/// Human-readable outward enclosure, e.g. `[1.9999999999999996e0, 3]`.
pub fn decimal_enclosure(iv: Interval) -> String {
    if !iv.is_bounded() {
        return "[-inf, inf]".into();
    }
    format!("[{}, {}]", decimal_down(iv.lo()), decimal_up(iv.hi()))
}
