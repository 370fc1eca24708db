//! Numeric profiles.
//!
//! Everything in this crate is generic over [`Scalar`]. Two profiles exist:
//! exact rationals ([`Rational`], the default) and binary64 (`f64`) for large
//! block counts where rational coefficients grow too quickly.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational numbers.
pub type Rational = BigRational;

/// Relative tolerance used by the floating profile when comparing values.
pub const F64_REL_TOL: f64 = 1e-12;

/// Field operations plus the handful of conversions the algorithms need.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_i64(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Exact conversion for rationals (every finite double is a dyadic rational).
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Largest integer not exceeding `self`.
    fn floor_i64(&self) -> i64;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Equality under the profile: exact for rationals, relative tolerance for floats.
    fn approx_eq(&self, other: &Self) -> bool;

    /// True for the exact profile.
    fn is_exact() -> bool;

    fn profile_name() -> &'static str;

    fn pow_u32(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for Rational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn floor_i64(&self) -> i64 {
        self.floor().to_integer().to_i64().expect("floor out of i64 range")
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn is_exact() -> bool {
        true
    }

    fn profile_name() -> &'static str {
        "rational"
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn approx_eq(&self, other: &Self) -> bool {
        let scale = self.abs().max(other.abs()).max(1.0);
        (self - other).abs() <= F64_REL_TOL * scale
    }

    fn is_exact() -> bool {
        false
    }

    fn profile_name() -> &'static str {
        "f64"
    }
}

/// Parses `"3"`, `"-2/5"` or `"0.25"` into a scalar.
pub fn parse_scalar<T: Scalar>(text: &str) -> Option<T> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().ok()?;
        let den: i64 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(T::from_ratio(num, den));
    }
    if let Ok(v) = text.parse::<i64>() {
        return Some(T::from_i64(v));
    }
    parse_decimal(text)
}

// Decimal literals are read exactly ("0.1" is 1/10, not the nearest double).
fn parse_decimal<T: Scalar>(text: &str) -> Option<T> {
    let value: f64 = text.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let negative = mantissa.starts_with('-');
    let mantissa = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let scale = exponent - frac_part.len() as i32;
    if digits.len() > 18 || scale.unsigned_abs() > 18 {
        return T::from_f64(value);
    }
    let mut out = T::from_i64(digits.parse::<i64>().ok()?);
    let ten = T::from_i64(10);
    if scale >= 0 {
        out = out * ten.pow_u32(scale as u32);
    } else {
        out = out / ten.pow_u32((-scale) as u32);
    }
    Some(if negative { -out } else { out })
}

/// Renders a scalar for reports: `p/q` for rationals, shortest round-trip for floats.
pub fn format_scalar<T: Scalar>(v: &T) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_scalar::<Rational>("3/6"), Some(q(1, 2)));
        assert_eq!(parse_scalar::<Rational>("-4"), Some(q(-4, 1)));
        assert_eq!(parse_scalar::<Rational>("0.1"), Some(q(1, 10)));
        assert_eq!(parse_scalar::<Rational>("2.5e-1"), Some(q(1, 4)));
        assert_eq!(parse_scalar::<Rational>("1/0"), None);
        assert_eq!(parse_scalar::<Rational>("abc"), None);
        assert_eq!(parse_scalar::<f64>("1/4"), Some(0.25));
    }

    #[test]
    fn floor_matches_integer_part() {
        assert_eq!(q(5, 3).floor_i64(), 1);
        assert_eq!(q(-1, 3).floor_i64(), -1);
        assert_eq!((5.0f64 / 3.0).floor_i64(), 1);
    }

    #[test]
    fn float_comparison_is_relative() {
        assert!(1.0f64.approx_eq(&(1.0 + 1e-14)));
        assert!(!1.0f64.approx_eq(&(1.0 + 1e-9)));
        assert!(1e6f64.approx_eq(&(1e6 + 1e-7)));
    }
}
