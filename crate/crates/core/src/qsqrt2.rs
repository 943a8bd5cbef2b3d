//! Exact arithmetic in the quadratic field Q(√2).
//!
//! The CHSH-optimal measurement angles used by the GHZ strategies only ever
//! produce matrix elements of the form `a + b√2` with rational `a`, `b`, so
//! behaviors, scores and witness evaluations can be carried out exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// A number `rational + irrational·√2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    rational: BigRational,
    irrational: BigRational,
}

impl QSqrt2 {
    pub fn new(rational: BigRational, irrational: BigRational) -> Self {
        Self {
            rational,
            irrational,
        }
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self::new(r, BigRational::zero())
    }

    pub fn sqrt2() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    /// Coefficient of 1.
    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    /// Coefficient of √2.
    pub fn irrational_part(&self) -> &BigRational {
        &self.irrational
    }

    /// Galois conjugate `a − b√2`.
    pub fn conjugate(&self) -> Self {
        Self::new(self.rational.clone(), -self.irrational.clone())
    }

    /// Field norm `a² − 2b²`, rational and nonzero for nonzero elements.
    pub fn norm(&self) -> BigRational {
        let two = BigRational::from_integer(BigInt::from(2));
        &self.rational * &self.rational - two * &self.irrational * &self.irrational
    }

    pub fn signum(&self) -> Ordering {
        let a = &self.rational;
        let b = &self.irrational;
        let zero = BigRational::zero();
        match (a.cmp(&zero), b.cmp(&zero)) {
            (Ordering::Equal, sb) => sb,
            (sa, Ordering::Equal) => sa,
            (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
            (Ordering::Less, Ordering::Less) => Ordering::Less,
            // opposite signs: compare a² with 2b²
            (sa, _) => {
                let n = self.norm();
                match n.cmp(&zero) {
                    Ordering::Equal => Ordering::Equal,
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.rational.to_f64().unwrap_or(f64::NAN);
        let b = self.irrational.to_f64().unwrap_or(f64::NAN);
        a + b * std::f64::consts::SQRT_2
    }

    pub fn is_rational(&self) -> bool {
        self.irrational.is_zero()
    }
}

impl From<BigRational> for QSqrt2 {
    fn from(r: BigRational) -> Self {
        Self::from_rational(r)
    }
}

impl From<i64> for QSqrt2 {
    fn from(v: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(v)))
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.irrational.is_zero() {
            return write!(f, "{}", self.rational);
        }
        if self.rational.is_zero() {
            return write!(f, "{}*sqrt2", self.irrational);
        }
        if self.irrational.is_negative() {
            write!(f, "{}-{}*sqrt2", self.rational, -self.irrational.clone())
        } else {
            write!(f, "{}+{}*sqrt2", self.rational, self.irrational)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseQSqrt2Error(pub String);

impl fmt::Display for ParseQSqrt2Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid quadratic number `{}`", self.0)
    }
}

impl std::error::Error for ParseQSqrt2Error {}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        Some(BigRational::new(n, d))
    } else {
        BigInt::from_str(s).ok().map(BigRational::from_integer)
    }
}

impl FromStr for QSqrt2 {
    type Err = ParseQSqrt2Error;

    /// Accepts the `Display` forms: `p/q`, `p/q*sqrt2`, `p/q+r/s*sqrt2`, `p/q-r/s*sqrt2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseQSqrt2Error(s.to_string());
        let t = s.trim();
        let Some(body) = t.strip_suffix("*sqrt2") else {
            return parse_rational(t).map(Self::from_rational).ok_or_else(err);
        };
        // split at the last sign that is not the leading one
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last();
        match split {
            None => parse_rational(body)
                .map(|b| Self::new(BigRational::zero(), b))
                .ok_or_else(err),
            Some(i) => {
                let a = parse_rational(&body[..i]).ok_or_else(err)?;
                let sign_neg = body[i..].starts_with('-');
                let b = parse_rational(&body[i + 1..]).ok_or_else(err)?;
                Ok(Self::new(a, if sign_neg { -b } else { b }))
            }
        }
    }
}

impl Default for QSqrt2 {
    fn default() -> Self {
        Self::zero()
    }
}

impl serde::Serialize for QSqrt2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for QSqrt2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt2 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.clone() - other.clone()).signum()
    }
}

impl Add for QSqrt2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.rational + rhs.rational, self.irrational + rhs.irrational)
    }
}

impl<'a> Add<&'a QSqrt2> for &'a QSqrt2 {
    type Output = QSqrt2;
    fn add(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2::new(
            &self.rational + &rhs.rational,
            &self.irrational + &rhs.irrational,
        )
    }
}

impl Sub for QSqrt2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.rational - rhs.rational, self.irrational - rhs.irrational)
    }
}

impl Mul for QSqrt2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<'a> Mul<&'a QSqrt2> for &'a QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, rhs: &QSqrt2) -> QSqrt2 {
        let two = BigRational::from_integer(BigInt::from(2));
        QSqrt2::new(
            &self.rational * &rhs.rational + two * &self.irrational * &rhs.irrational,
            &self.rational * &rhs.irrational + &self.irrational * &rhs.rational,
        )
    }
}

impl Div for QSqrt2 {
    type Output = Self;
    /// Panics on division by zero, like `BigRational`.
    fn div(self, rhs: Self) -> Self {
        let n = rhs.norm();
        assert!(!n.is_zero(), "division by zero in Q(sqrt2)");
        let num = &self * &rhs.conjugate();
        Self::new(num.rational / &n, num.irrational / n)
    }
}

impl Rem for QSqrt2 {
    type Output = Self;
    /// Division is exact in a field, so the remainder is always zero.
    fn rem(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "remainder by zero in Q(sqrt2)");
        Self::zero()
    }
}

impl Neg for QSqrt2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.rational, -self.irrational)
    }
}

impl Zero for QSqrt2 {
    fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.irrational.is_zero()
    }
}

impl One for QSqrt2 {
    fn one() -> Self {
        Self::new(BigRational::one(), BigRational::zero())
    }
}

impl Num for QSqrt2 {
    type FromStrRadixErr = ParseQSqrt2Error;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err(ParseQSqrt2Error(s.to_string()));
        }
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn sign_of_mixed_terms() {
        // 3 - 2√2 ≈ 0.17 > 0
        assert_eq!(QSqrt2::new(q(3, 1), q(-2, 1)).signum(), Ordering::Greater);
        // 1 - √2 < 0
        assert_eq!(QSqrt2::new(q(1, 1), q(-1, 1)).signum(), Ordering::Less);
        // -3 + 2√2 < 0
        assert_eq!(QSqrt2::new(q(-3, 1), q(2, 1)).signum(), Ordering::Less);
        assert_eq!(QSqrt2::zero().signum(), Ordering::Equal);
    }

    #[test]
    fn field_operations() {
        let s = QSqrt2::sqrt2();
        assert_eq!(s.clone() * s.clone(), QSqrt2::from(2));
        let x = QSqrt2::new(q(1, 3), q(-5, 7));
        let y = QSqrt2::new(q(2, 1), q(1, 2));
        let z = x.clone() / y.clone();
        assert_eq!(z * y, x);
    }

    #[test]
    fn display_roundtrip() {
        for v in [
            QSqrt2::new(q(1, 3), q(-5, 7)),
            QSqrt2::new(q(0, 1), q(5, 7)),
            QSqrt2::new(q(-2, 9), q(0, 1)),
            QSqrt2::new(q(-2, 9), q(1, 4)),
        ] {
            let s = v.to_string();
            assert_eq!(s.parse::<QSqrt2>().unwrap(), v, "{s}");
        }
    }
}
