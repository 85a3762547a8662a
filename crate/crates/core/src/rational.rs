//! Exact rational helpers: parsing, rendering and conversion.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational used for weights and congestions.
pub type Rational = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("rational literal `{0}` does not fit in 64-bit integers")]
    Overflow(String),
}

/// Parses `"3"`, `"-2/5"`, `"0.125"` or `"1e-2"`-free decimal forms exactly.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let malformed = || RationalParseError::Malformed(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| malformed())?;
        let d: i64 = d.trim().parse().map_err(|_| malformed())?;
        if d == 0 {
            return Err(RationalParseError::ZeroDenominator(s.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(malformed());
    }
    let overflow = || RationalParseError::Overflow(s.to_string());
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| overflow())? };
    let denom = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(overflow)?;
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Always renders as `num/den`, including integers (`3/1`).
pub fn render_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    // i64 -> f64 is exact below 2^53, which covers every congestion we build.
    *r.numer() as f64 / *r.denom() as f64
}

pub fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact conversion of a finite float (every finite f64 is a dyadic rational).
pub fn big_from_f64(x: f64) -> Option<BigRational> {
    if x == 0.0 {
        return Some(BigRational::zero());
    }
    BigRational::from_float(x)
}

pub fn big_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
