//! Scalar abstractions.
//!
//! Two families of number types are used across the crate:
//!
//! * [`Real`]: IEEE floating point (`f32`, `f64`). Everything transcendental
//!   (special functions, quadrature, optimization, f-divergences) is written
//!   against this trait.
//! * [`Field`]: anything closed under `+ - * /` with an ordering. Besides the
//!   floats this covers exact rationals, which the Bernoulli closed forms use
//!   to reproduce small tables without rounding.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating-point scalar.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every `Real` can represent (a rounding of)
    /// any finite `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field, exact or not.
pub trait Field: Num + Signed + Clone + PartialOrd + Debug {
    fn from_count(n: u64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_count(num.unsigned_abs()) * Self::sign_of(num)
            / (Self::from_count(den.unsigned_abs()) * Self::sign_of(den))
    }

    fn to_f64(&self) -> f64;

    #[doc(hidden)]
    fn sign_of(x: i64) -> Self {
        if x < 0 {
            -Self::one()
        } else {
            Self::one()
        }
    }

    fn powu(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Field for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn powu(&self, e: u32) -> Self {
        self.powi(e as i32)
    }
}

impl Field for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn powu(&self, e: u32) -> Self {
        self.powi(e as i32)
    }
}

impl Field for BigRational {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Field for Ratio<i128> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i128)
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Parses a decimal literal such as `"0.25"`, `"-3"`, `"1e-2"` or `"2/7"` into
/// an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let s = text.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().ok()? / BigInt::from(10);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(all);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(parse_rational("0.5"), Some(q(1, 2)));
        assert_eq!(parse_rational("0.2"), Some(q(1, 5)));
        assert_eq!(parse_rational("-1.25"), Some(q(-5, 4)));
        assert_eq!(parse_rational("1e-2"), Some(q(1, 100)));
        assert_eq!(parse_rational("2/7"), Some(q(2, 7)));
        assert_eq!(parse_rational("3"), Some(q(3, 1)));
        assert_eq!(parse_rational(".5"), Some(q(1, 2)));
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational(""), None);
    }

    #[test]
    fn field_ratio_signs() {
        let x: f64 = Field::from_ratio(-3, 4);
        assert_eq!(x, -0.75);
        let r: BigRational = Field::from_ratio(3, -4);
        assert_eq!(r, BigRational::new(BigInt::from(-3), BigInt::from(4)));
    }
}
