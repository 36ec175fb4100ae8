use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::rational::{format_rational, parse_rational, rational_sqrt, to_f64, Rational};

/// Exact polynomial `Σ c_i π^i` with rational coefficients. Squared lengths
/// are stored this way so that values like `4π(7 − π)` compare exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PiPoly {
    coeffs: Vec<Rational>,
}

impl PiPoly {
    pub fn constant(c: Rational) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn pi() -> Self {
        Self::from_coeffs(vec![Rational::zero(), Rational::one()])
    }

    pub fn from_coeffs(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).copied().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self.coeffs.len() {
            0 => Some(Rational::zero()),
            1 => Some(self.coeffs[0]),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * std::f64::consts::PI + to_f64(c))
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::from_coeffs((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::from_coeffs(vec![]);
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::from_coeffs(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(Rational::one()), |acc, _| acc.mul(self))
    }

    /// Sign, exact when the value is rational; otherwise from the float
    /// value (π is transcendental, so a nonconstant polynomial is never zero).
    pub fn signum(&self) -> Ordering {
        if let Some(r) = self.as_rational() {
            return r.cmp(&Rational::zero());
        }
        self.to_f64().partial_cmp(&0.0).unwrap_or(Ordering::Equal)
    }

    /// Exact comparison.
    pub fn cmp_exact(&self, o: &Self) -> Ordering {
        self.sub(o).signum()
    }
}

impl fmt::Display for PiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let body = match i {
                0 => format_rational(c),
                1 => format!("{}*pi", format_rational(c)),
                _ => format!("{}*pi^{i}", format_rational(c)),
            };
            parts.push(body);
        }
        f.write_str(&parts.join(" + ").replace("+ -", "- "))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LengthParseError {
    #[error("unexpected character '{ch}' at offset {at}")]
    Unexpected { ch: char, at: usize },
    #[error("unexpected end of expression")]
    Eof,
    #[error("bad number '{0}'")]
    Number(String),
    #[error("division by a non-constant or zero expression")]
    Division,
    #[error("exponent must be a small non-negative integer")]
    Exponent,
    #[error("length must be positive, got {0}")]
    NonPositive(String),
    #[error("'{0}' is not expressible: sqrt only at the outermost level or of exact squares")]
    Sqrt(String),
}

/// A length `λ` with exact square `λ²`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Length {
    expr: String,
    sq: PiPoly,
}

impl Length {
    pub fn from_sq(sq: PiPoly) -> Self {
        let expr = match sq.as_rational().and_then(|r| rational_sqrt(&r)) {
            Some(r) => format_rational(&r),
            None => format!("sqrt({sq})"),
        };
        Self { expr, sq }
    }

    pub fn from_rational_sq(r: Rational) -> Self {
        Self::from_sq(PiPoly::constant(r))
    }

    /// Parses `expr` or `sqrt(expr)` where `expr` is built from decimals,
    /// `pi`, `+ - * /`, integer powers `^` and parentheses.
    pub fn parse(s: &str) -> Result<Self, LengthParseError> {
        let sq = match Self::parse_outer_sqrt(s) {
            Some(inner) => inner,
            None => {
                let mut p = Parser { s: s.as_bytes(), pos: 0 };
                let e = p.expr()?;
                p.finish()?;
                e.pow(2)
            }
        };
        if sq.signum() != Ordering::Greater {
            return Err(LengthParseError::NonPositive(sq.to_string()));
        }
        Ok(Self { expr: s.trim().to_string(), sq })
    }

    fn parse_outer_sqrt(s: &str) -> Option<PiPoly> {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        if !p.peek_word("sqrt") {
            return None;
        }
        p.pos += 4;
        p.expect(b'(').ok()?;
        let inner = p.expr().ok()?;
        p.expect(b')').ok()?;
        p.finish().ok()?;
        Some(inner)
    }

    pub fn expr(&self) -> &str {
        &self.expr
    }

    pub fn sq(&self) -> &PiPoly {
        &self.sq
    }

    pub fn value(&self) -> f64 {
        self.sq.to_f64().max(0.0).sqrt()
    }

    pub fn cmp_exact(&self, o: &Self) -> Ordering {
        self.sq.cmp_exact(&o.sq)
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.expr)
    }
}

impl Serialize for Length {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.expr)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn finish(&mut self) -> Result<(), LengthParseError> {
        self.skip_ws();
        match self.s.get(self.pos) {
            None => Ok(()),
            Some(&c) => Err(LengthParseError::Unexpected { ch: c as char, at: self.pos }),
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn peek_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        self.s[self.pos..].starts_with(w.as_bytes())
    }

    fn expect(&mut self, c: u8) -> Result<(), LengthParseError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(LengthParseError::Unexpected { ch: x as char, at: self.pos }),
            None => Err(LengthParseError::Eof),
        }
    }

    fn expr(&mut self) -> Result<PiPoly, LengthParseError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                b'-' => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<PiPoly, LengthParseError> {
        let mut acc = self.factor()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?);
                }
                b'/' => {
                    self.pos += 1;
                    let d = self.factor()?.as_rational().filter(|r| !r.is_zero()).ok_or(LengthParseError::Division)?;
                    acc = acc.scale(&(Rational::one() / d));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<PiPoly, LengthParseError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let e = self.unary()?.as_rational().ok_or(LengthParseError::Exponent)?;
            if !e.is_integer() || e.is_negative() || *e.numer() > 16 {
                return Err(LengthParseError::Exponent);
            }
            return Ok(base.pow(*e.numer() as u32));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<PiPoly, LengthParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.scale(&-Rational::one()))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<PiPoly, LengthParseError> {
        match self.peek() {
            None => Err(LengthParseError::Eof),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                let r = parse_rational(text).map_err(|_| LengthParseError::Number(text.into()))?;
                Ok(PiPoly::constant(r))
            }
            Some(_) if self.peek_word("pi") => {
                self.pos += 2;
                Ok(PiPoly::pi())
            }
            Some(_) if self.peek_word("sqrt") => {
                // inner square roots are accepted only of exact rational squares
                self.pos += 4;
                self.expect(b'(')?;
                let start = self.pos;
                let inner = self.expr()?;
                self.expect(b')')?;
                let text = String::from_utf8_lossy(&self.s[start..self.pos - 1]).to_string();
                inner
                    .as_rational()
                    .and_then(|r| rational_sqrt(&r))
                    .map(PiPoly::constant)
                    .ok_or(LengthParseError::Sqrt(text))
            }
            Some(c) => Err(LengthParseError::Unexpected { ch: c as char, at: self.pos }),
        }
    }
}
