//! Exact decimal handling. Every value the library computes with is an
//! integer; decimals in input files are multiplied by a declared scale and
//! must land on an integer.

use std::fmt;

use num_rational::Ratio;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GmkError, Result};

/// A JSON number kept in its textual form until it is scaled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNum(pub String);

impl From<i64> for RawNum {
    fn from(v: i64) -> Self {
        RawNum(v.to_string())
    }
}

impl From<u64> for RawNum {
    fn from(v: u64) -> Self {
        RawNum(v.to_string())
    }
}

impl Serialize for RawNum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.parse::<i64>() {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0),
        }
    }
}

impl<'de> Deserialize<'de> for RawNum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = RawNum;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a decimal string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<RawNum, E> {
                Ok(RawNum(v.to_string()))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<RawNum, E> {
                Ok(RawNum(v.to_string()))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<RawNum, E> {
                // Display for f64 prints the shortest string that round-trips.
                Ok(RawNum(format!("{v}")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<RawNum, E> {
                Ok(RawNum(v.trim().to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

/// Parses a plain decimal literal (`-12`, `3.25`, `0.5`) into an exact
/// fraction `numer / 10^k`.
pub fn parse_decimal(text: &str) -> Result<Ratio<i128>> {
    let bad = || GmkError::input(format!("not a decimal number: {text:?}"));
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    if body.is_empty() || body.contains(['e', 'E']) {
        return Err(bad());
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if int_part.len() + frac_part.len() > 30 {
        return Err(GmkError::input(format!("number too long: {text:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: i128 = digits.parse().map_err(|_| bad())?;
    if neg {
        numer = -numer;
    }
    let denom = 10i128.pow(frac_part.len() as u32);
    Ok(Ratio::new(numer, denom))
}

/// Multiplies `raw` by `scale` and requires an integer result.
pub fn scale_to_int(raw: &RawNum, scale: u64, what: &str) -> Result<i64> {
    let value = parse_decimal(&raw.0)? * Ratio::from_integer(scale as i128);
    if !value.is_integer() {
        return Err(GmkError::input(format!(
            "{what}: value {} is not an integer after scaling by {scale}",
            raw.0
        )));
    }
    i64::try_from(value.to_integer()).map_err(|_| GmkError::input(format!("{what}: value {} overflows", raw.0)))
}

/// Parses a decimal string into a nonnegative exact rational.
pub fn parse_ratio(text: &str) -> Result<Ratio<u64>> {
    let r = parse_decimal(text)?;
    if *r.numer() < 0 {
        return Err(GmkError::input(format!("expected a nonnegative number, got {text:?}")));
    }
    let n = u64::try_from(*r.numer()).map_err(|_| GmkError::input("number too large"))?;
    let d = u64::try_from(*r.denom()).map_err(|_| GmkError::input("number too precise"))?;
    Ok(Ratio::new(n, d))
}

pub fn ratio_to_string(r: &Ratio<u64>) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_decimal("2.5").unwrap(), Ratio::new(5, 2));
        assert_eq!(parse_decimal("-0.25").unwrap(), Ratio::new(-1, 4));
        assert_eq!(parse_decimal("7").unwrap(), Ratio::from_integer(7));
        assert!(parse_decimal("1e3").is_err());
        assert!(parse_decimal("abc").is_err());
        assert!(parse_decimal(".").is_err());
    }

    #[test]
    fn scaling_requires_integer_result() {
        assert_eq!(scale_to_int(&RawNum("2.5".into()), 2, "x").unwrap(), 5);
        assert_eq!(scale_to_int(&RawNum("3".into()), 1, "x").unwrap(), 3);
        assert!(scale_to_int(&RawNum("2.5".into()), 1, "x").is_err());
    }

    #[test]
    fn raw_numbers_from_json() {
        let v: Vec<RawNum> = serde_json::from_str(r#"[1, 2.5, "0.75", -3]"#).unwrap();
        assert_eq!(v[0].0, "1");
        assert_eq!(v[1].0, "2.5");
        assert_eq!(v[2].0, "0.75");
        assert_eq!(v[3].0, "-3");
    }
}
