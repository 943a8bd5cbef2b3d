//! Scalar abstraction shared by behaviors, the quantum oracle and the exact
//! simplex.
//!
//! Floats are for exploration. `BigRational` and [`QSqrt2`] are exact and are
//! what certificates are checked in.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

use crate::qsqrt2::QSqrt2;

/// Denominator bound used when a float has to be turned into a rational.
pub const RATIONALIZE_MAX_DEN: u64 = 1_000_000_000;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + std::ops::Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Exact arithmetic: comparisons ignore tolerances.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Exact for exact scalars, rounded for floats.
    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// `√2` when the scalar field contains it.
    fn sqrt2() -> Option<Self>;

    /// `cos(π·num/den)` when representable. Floats always succeed.
    fn cos_pi(num: i64, den: i64) -> Option<Self>;

    /// Exact image in Q(√2). Floats are rounded with [`rationalize`].
    fn to_exact(&self) -> QSqrt2;

    fn from_usize(v: usize) -> Self {
        Self::from_ratio(v as i64, 1)
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Equality up to `tol` for floats, exact equality otherwise.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self == other
        } else {
            (self.to_f64() - other.to_f64()).abs() <= tol
        }
    }

    /// `self < 0` beyond tolerance (exact scalars: strictly negative).
    fn is_negative_tol(&self, tol: f64) -> bool {
        if Self::EXACT {
            *self < Self::zero()
        } else {
            self.to_f64() < -tol
        }
    }

    fn sin_pi(num: i64, den: i64) -> Option<Self> {
        // sin(πq) = cos(π(q − 1/2))
        Self::cos_pi(2 * num - den, 2 * den)
    }
}

/// Best rational approximation with denominator at most `max_den`
/// (continued fractions). Non-finite inputs map to zero.
pub fn rationalize(x: f64, max_den: u64) -> BigRational {
    if !x.is_finite() {
        return BigRational::zero();
    }
    if let Some(r) = BigRational::from_float(x) {
        if r.denom() <= &BigInt::from(max_den) {
            return r;
        }
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    // convergents h/k
    let (mut h0, mut h1): (i128, i128) = (0, 1);
    let (mut k0, mut k1): (i128, i128) = (1, 0);
    let max_den = max_den as i128;
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e18 {
            break;
        }
        let a = a as i128;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den {
            // best semiconvergent
            let t = (max_den - k0) / k1;
            let hs = t * h1 + h0;
            let ks = t * k1 + k0;
            let c1 = (hs as f64 / ks as f64 - x.abs()).abs();
            let c2 = (h1 as f64 / k1 as f64 - x.abs()).abs();
            if ks > 0 && c1 < c2 {
                h1 = hs;
                k1 = ks;
            }
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = v - a as f64;
        if frac < 1e-18 {
            break;
        }
        v = 1.0 / frac;
    }
    let r = BigRational::new(BigInt::from(h1), BigInt::from(k1.max(1)));
    if neg {
        -r
    } else {
        r
    }
}

fn reduce_angle(num: i64, den: i64) -> (i64, i64) {
    // returns num/den reduced into [0, 2) as a fraction with positive den
    let (mut n, mut d) = (num, den);
    if d < 0 {
        n = -n;
        d = -d;
    }
    let g = num_integer::gcd(n, d).max(1);
    n /= g;
    d /= g;
    n = n.rem_euclid(2 * d);
    (n, d)
}

/// `cos(π·num/den)` as `(rational, coefficient of √2)` for multiples of π/4.
fn cos_pi_quadratic(num: i64, den: i64) -> Option<(BigRational, BigRational)> {
    let (n, d) = reduce_angle(num, den);
    let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
    let z = BigRational::zero();
    let eighth = match (n, d) {
        (0, 1) => 0,
        (1, 4) => 1,
        (1, 2) => 2,
        (3, 4) => 3,
        (1, 1) => 4,
        (5, 4) => 5,
        (3, 2) => 6,
        (7, 4) => 7,
        _ => return None,
    };
    Some(match eighth {
        0 => (q(1, 1), z),
        1 => (z, q(1, 2)),
        2 => (z.clone(), z),
        3 => (z, q(-1, 2)),
        4 => (q(-1, 1), z),
        5 => (z, q(-1, 2)),
        6 => (z.clone(), z),
        _ => (z, q(1, 2)),
    })
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt2() -> Option<Self> {
        Some(std::f64::consts::SQRT_2)
    }
    fn cos_pi(num: i64, den: i64) -> Option<Self> {
        if let Some((a, b)) = cos_pi_quadratic(num, den) {
            return Some(QSqrt2::new(a, b).to_f64());
        }
        Some((std::f64::consts::PI * num as f64 / den as f64).cos())
    }
    fn to_exact(&self) -> QSqrt2 {
        QSqrt2::from_rational(rationalize(*self, RATIONALIZE_MAX_DEN))
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }
    fn from_rational(r: &BigRational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn sqrt2() -> Option<Self> {
        Some(std::f32::consts::SQRT_2)
    }
    fn cos_pi(num: i64, den: i64) -> Option<Self> {
        <f64 as Scalar>::cos_pi(num, den).map(|v| v as f32)
    }
    fn to_exact(&self) -> QSqrt2 {
        QSqrt2::from_rational(rationalize(*self as f64, RATIONALIZE_MAX_DEN))
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn sqrt2() -> Option<Self> {
        None
    }
    fn cos_pi(num: i64, den: i64) -> Option<Self> {
        cos_pi_quadratic(num, den).and_then(|(a, b)| b.is_zero().then_some(a))
    }
    fn to_exact(&self) -> QSqrt2 {
        QSqrt2::from_rational(self.clone())
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

impl Scalar for QSqrt2 {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        QSqrt2::from_rational(BigRational::new(num.into(), den.into()))
    }
    fn from_rational(r: &BigRational) -> Self {
        QSqrt2::from_rational(r.clone())
    }
    fn to_f64(&self) -> f64 {
        QSqrt2::to_f64(self)
    }
    fn sqrt2() -> Option<Self> {
        Some(QSqrt2::sqrt2())
    }
    fn cos_pi(num: i64, den: i64) -> Option<Self> {
        cos_pi_quadratic(num, den).map(|(a, b)| QSqrt2::new(a, b))
    }
    fn to_exact(&self) -> QSqrt2 {
        self.clone()
    }
}

/// Shorthand for `BigRational::new(num, den)`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}
