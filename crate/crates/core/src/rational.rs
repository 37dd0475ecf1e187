//! Exact rational numbers and impact vectors.
//!
//! Probabilities and impacts are kept as arbitrary-precision
//! rational so that the componentwise `<=` test behind a verdict is exact.
//! Floats only show up when rendering for humans.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumberError {
    #[error("empty number")]
    Empty,
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `12`, `0.25` or `3/4` (each side of a fraction may itself be a
/// decimal). Decimals are read exactly: `0.2` is `2/10`.
pub fn parse_rational(text: &str) -> Result<Rational, NumberError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(NumberError::Empty);
    }
    match text.split_once('/') {
        Some((num, den)) => {
            let num = parse_decimal(num.trim(), text)?;
            let den = parse_decimal(den.trim(), text)?;
            if den.is_zero() {
                return Err(NumberError::ZeroDenominator(text.to_string()));
            }
            Ok(num / den)
        }
        None => parse_decimal(text, text),
    }
}

fn parse_decimal(part: &str, whole: &str) -> Result<Rational, NumberError> {
    let malformed = || NumberError::Malformed(whole.to_string());
    let (int_part, frac_part) = match part.split_once('.') {
        Some((i, f)) => (i, f),
        None => (part, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    if part.contains('.') && (frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit())) {
        return Err(malformed());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| malformed())?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Ok(Rational::new(numer, denom))
}

/// Renders an exact decimal when the expansion terminates (`151`, `6.6`),
/// otherwise `a/b`.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    let mut den = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", q.numer(), q.denom());
    }
    let places = twos.max(fives);
    let scaled = q * Rational::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.to_integer().abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (i, f) = digits.split_at(digits.len() - places);
    let sign = if q.is_negative() { "-" } else { "" };
    format!("{sign}{i}.{f}")
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// A vector of `k` additive resource consumptions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Impact(Vec<Rational>);

impl Impact {
    pub fn zero(dim: usize) -> Self {
        Impact(vec![Rational::zero(); dim])
    }

    pub fn new(components: Vec<Rational>) -> Self {
        Impact(components)
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Impact(values.iter().map(|&v| int(v)).collect())
    }

    /// Parses a comma separated list such as `155,7.5` or `1/2, 3`.
    pub fn parse_list(text: &str) -> Result<Self, NumberError> {
        text.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>().map(Impact)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_components(self) -> Vec<Rational> {
        self.0
    }

    pub fn scale(&self, factor: &Rational) -> Impact {
        Impact(self.0.iter().map(|c| c * factor).collect())
    }

    /// Componentwise `<=`.
    pub fn le(&self, other: &Impact) -> bool {
        assert_eq!(self.dim(), other.dim(), "impact dimension mismatch");
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|c| !c.is_negative())
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }
}

impl AddAssign<&Impact> for Impact {
    fn add_assign(&mut self, rhs: &Impact) {
        assert_eq!(self.dim(), rhs.dim(), "impact dimension mismatch");
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl Add<&Impact> for &Impact {
    type Output = Impact;
    fn add(self, rhs: &Impact) -> Impact {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Impact> for &Impact {
    type Output = Impact;
    fn sub(self, rhs: &Impact) -> Impact {
        assert_eq!(self.dim(), rhs.dim(), "impact dimension mismatch");
        Impact(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Display for Impact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_strings().join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.2").unwrap(), ratio(1, 5));
        assert_eq!(parse_rational("7.5").unwrap(), ratio(15, 2));
        assert_eq!(parse_rational("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational(" 12 ").unwrap(), int(12));
        assert_eq!(parse_rational("0.5/2").unwrap(), ratio(1, 4));
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse_rational(""), Err(NumberError::Empty));
        assert!(parse_rational("1.").is_err());
        assert!(parse_rational(".5").is_err());
        assert!(parse_rational("-1").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!(matches!(parse_rational("1/0"), Err(NumberError::ZeroDenominator(_))));
    }

    #[test]
    fn formatting() {
        assert_eq!(format_rational(&int(151)), "151");
        assert_eq!(format_rational(&ratio(33, 5)), "6.6");
        assert_eq!(format_rational(&ratio(1, 3)), "1/3");
        assert_eq!(format_rational(&ratio(1, 40)), "0.025");
        assert_eq!(format_rational(&ratio(-11, 4)), "-2.75");
    }

    #[test]
    fn componentwise_order() {
        let a = Impact::from_ints(&[1, 5]);
        let b = Impact::from_ints(&[2, 5]);
        assert!(a.le(&b));
        assert!(!b.le(&a));
        assert!(a.le(&a));
        assert_eq!(&a + &b, Impact::from_ints(&[3, 10]));
        assert_eq!(format!("{}", Impact::parse_list("155,7.5").unwrap()), "[155, 7.5]");
    }
}
