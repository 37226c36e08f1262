//! Exact rational numbers as used throughout the formulation layer.
//!
//! Floating point only appears inside the solver; everything a user or a
//! model writes down is carried as an exact [`Rational`].

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses a decimal literal (`12`, `-0.5`, `1e-6`, `2.5E3`) or a fraction
/// (`3/4`, `-1/3`) into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_decimal(num.trim())?;
        let den = parse_decimal(den.trim())?;
        if den.is_zero() {
            return None;
        }
        return Some(num / den);
    }
    parse_decimal(text)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (negative, body) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Renders a rational as an exact decimal when its expansion terminates,
/// otherwise as `p/q`.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    let den = value.denom().clone();
    let (twos, rest) = strip_factor(&den, 2);
    let (fives, rest) = strip_factor(&rest, 5);
    if !rest.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let places = twos.max(fives);
    let scaled = value * Rational::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.to_integer();
    let negative = digits.sign() == Sign::Minus;
    let mut text = digits.abs().to_string();
    if text.len() <= places {
        text = format!("{}{}", "0".repeat(places - text.len() + 1), text);
    }
    let split = text.len() - places;
    let (whole, frac) = text.split_at(split);
    let frac = frac.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac}")
    }
}

fn strip_factor(n: &BigInt, factor: u32) -> (usize, BigInt) {
    let factor = BigInt::from(factor);
    let mut count = 0;
    let mut n = n.clone();
    loop {
        let (q, r) = n.div_rem(&factor);
        if !r.is_zero() || n.is_zero() {
            return (count, n);
        }
        n = q;
        count += 1;
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Emits a JSON number when the value survives a binary64 round trip,
/// otherwise a string in [`format_rational`] form.
pub fn rational_to_json(value: &Rational) -> Value {
    let text = format_rational(value);
    if let Ok(number) = text.parse::<serde_json::Number>() {
        if parse_rational(&number.to_string()).as_ref() == Some(value) {
            return Value::Number(number);
        }
    }
    Value::String(text)
}

pub fn rational_from_json(value: &Value) -> Result<Rational, String> {
    match value {
        Value::Number(n) => {
            parse_rational(&n.to_string()).ok_or_else(|| format!("unrepresentable number {n}"))
        }
        Value::String(s) => parse_rational(s).ok_or_else(|| format!("invalid number {s:?}")),
        other => Err(format!("expected a number, found {other}")),
    }
}

/// A rational extended with both infinities, used for variable bounds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRational {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl ExtRational {
    pub fn zero() -> Self {
        ExtRational::Finite(Rational::zero())
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtRational::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRational::NegInf => f64::NEG_INFINITY,
            ExtRational::Finite(v) => to_f64(v),
            ExtRational::PosInf => f64::INFINITY,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ExtRational::NegInf => Value::String("-inf".into()),
            ExtRational::Finite(v) => rational_to_json(v),
            ExtRational::PosInf => Value::String("inf".into()),
        }
    }

    pub fn from_json(value: &Value) -> Result<Self, String> {
        if let Value::String(s) = value {
            match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" | "+infinity" => return Ok(ExtRational::PosInf),
                "-inf" | "-infinity" => return Ok(ExtRational::NegInf),
                _ => {}
            }
        }
        rational_from_json(value).map(ExtRational::Finite)
    }
}

impl From<Rational> for ExtRational {
    fn from(v: Rational) -> Self {
        ExtRational::Finite(v)
    }
}

impl PartialOrd for ExtRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRational {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtRational::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::NegInf => f.write_str("-inf"),
            ExtRational::Finite(v) => f.write_str(&format_rational(v)),
            ExtRational::PosInf => f.write_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse_rational("12"), Some(int(12)));
        assert_eq!(parse_rational("-0.5"), Some(ratio(-1, 2)));
        assert_eq!(parse_rational("1e-6"), Some(ratio(1, 1_000_000)));
        assert_eq!(parse_rational("2.5E3"), Some(int(2500)));
        assert_eq!(parse_rational("-1/3"), Some(ratio(-1, 3)));
        assert_eq!(parse_rational(".25"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational(""), None);
        assert_eq!(parse_rational("-"), None);
    }

    #[test]
    fn formats_terminating_and_repeating() {
        assert_eq!(format_rational(&int(-7)), "-7");
        assert_eq!(format_rational(&ratio(1, 8)), "0.125");
        assert_eq!(format_rational(&ratio(-3, 40)), "-0.075");
        assert_eq!(format_rational(&ratio(1, 3)), "1/3");
        assert_eq!(format_rational(&ratio(-5, 6)), "-5/6");
    }

    #[test]
    fn json_numbers_round_trip_exactly() {
        for v in [int(3), ratio(1, 10), ratio(1, 3), ratio(-123456789, 1000)] {
            assert_eq!(rational_from_json(&rational_to_json(&v)).unwrap(), v);
        }
        let long = parse_rational("0.12345678901234567891").unwrap();
        assert!(rational_to_json(&long).is_string());
        assert_eq!(rational_from_json(&rational_to_json(&long)).unwrap(), long);
    }

    #[test]
    fn extended_ordering() {
        assert!(ExtRational::NegInf < ExtRational::zero());
        assert!(ExtRational::Finite(int(5)) < ExtRational::PosInf);
        assert_eq!(
            ExtRational::from_json(&Value::String("inf".into())).unwrap(),
            ExtRational::PosInf
        );
    }
}
