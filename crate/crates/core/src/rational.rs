//! Exact rational scalars and a small scalar abstraction shared by exact and
//! floating-point code paths.
//!
//! [`Rational`] is `Ratio<i128>`: always reduced, denominator positive.
//! Overflow panics (overflow checks are enabled in every profile), so a
//! result is either exact or absent.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};
use thiserror::Error;

/// Exact rational number, reduced with positive denominator.
pub type Rational = Ratio<i128>;

/// Dense exact vector.
pub type QVec = Vec<Rational>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Builds `n/d`. Panics if `d == 0`.
pub fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

/// Integer as a rational.
pub fn qi(n: i128) -> Rational {
    Rational::from_integer(n)
}

/// Parses `"p"`, `"p/q"` or a finite decimal such as `"-0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let bad = || ParseRationalError::Malformed(t.to_string());
    if let Some((a, b)) = t.split_once('/') {
        let n: i128 = a.trim().parse().map_err(|_| bad())?;
        let d: i128 = b.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(ParseRationalError::ZeroDenominator(t.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        let neg = ip.trim_start().starts_with('-');
        let digits = fp.len() as u32;
        if digits > 30 || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: i128 = if ip.is_empty() || ip == "-" || ip == "+" {
            0
        } else {
            ip.parse().map_err(|_| bad())?
        };
        let frac: i128 = if fp.is_empty() { 0 } else { fp.parse().map_err(|_| bad())? };
        let den = 10i128.pow(digits);
        let mag = whole.abs() * den + frac;
        return Ok(Rational::new(if neg { -mag } else { mag }, den));
    }
    t.parse::<i128>().map(Rational::from_integer).map_err(|_| bad())
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(x: &Rational) -> String {
    x.to_string()
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| *x.numer() as f64 / *x.denom() as f64)
}

/// Exact square root if `x` is the square of a rational.
pub fn rational_sqrt(x: &Rational) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let n = integer_sqrt(*x.numer())?;
    let d = integer_sqrt(*x.denom())?;
    Some(Rational::new(n, d))
}

fn integer_sqrt(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    (r * r == n).then_some(r)
}

pub fn is_integer(x: &Rational) -> bool {
    x.is_integer()
}

pub fn zeros(n: usize) -> QVec {
    vec![Rational::zero(); n]
}

pub fn unit(n: usize, i: usize) -> QVec {
    let mut v = zeros(n);
    v[i] = Rational::one();
    v
}

pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn vec_to_f64(v: &[Rational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

/// Scalars usable by the generic bracket and BCH code.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Picks the representation of a structure constant given both forms.
    fn from_constant(exact: &Rational, approx: f64) -> Self;
    /// Multiplication by a small exact rational.
    fn scale(&self, r: &Rational) -> Self;
    fn is_exact_zero(&self) -> bool;
}

impl Scalar for Rational {
    fn from_constant(exact: &Rational, _approx: f64) -> Self {
        *exact
    }
    fn scale(&self, r: &Rational) -> Self {
        self * r
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    fn from_constant(_exact: &Rational, approx: f64) -> Self {
        approx
    }
    fn scale(&self, r: &Rational) -> Self {
        self * to_f64(r)
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Serde adapters that write rationals as strings.
pub mod serde_q {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&format_rational(x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter()
                .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }

    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
            let rows: Vec<Vec<String>> =
                m.iter().map(|r| r.iter().map(format_rational).collect()).collect();
            let mut seq = s.serialize_seq(Some(rows.len()))?;
            for r in &rows {
                seq.serialize_element(r)?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Vec<Vec<Rational>>, D::Error> {
            let raw = Vec::<Vec<String>>::deserialize(d)?;
            raw.iter()
                .map(|r| {
                    r.iter()
                        .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                        .collect()
                })
                .collect()
        }
    }
}
