//! Numeric scalars used throughout the crate.
//!
//! Every exact computation is written once against [`Scalar`] and runs either
//! on `f64` (fast, tolerance based) or on [`Rational`] (exact, zero tolerance).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Arbitrary precision rational number.
pub type Rational = BigRational;

/// A field element usable by the solvers.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Signed
    + Send
    + Sync
    + for<'a> std::ops::Add<&'a Self, Output = Self>
    + for<'a> std::ops::Mul<&'a Self, Output = Self>
    + 'static
{
    /// `true` when arithmetic is exact and comparisons need no tolerance.
    const EXACT: bool;

    /// Converts a float. Rationals take the exact binary value of `x`.
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// Tolerance for "equal to" checks: `1e-9` for floats, zero when exact.
    fn tolerance() -> Self;

    /// Parses `"0.25"`, `"-3"`, `"1/3"` or `"2.5e-3"`.
    fn parse_decimal(s: &str) -> Option<Self>;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    /// Textual form that [`Scalar::parse_decimal`] reads back unchanged.
    fn to_exact_string(&self) -> String;

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    /// Strictly greater than zero; `+0.0` is not positive.
    fn is_pos(&self) -> bool {
        *self > Self::zero()
    }

    /// Strictly below zero; `-0.0` is not negative.
    fn is_neg(&self) -> bool {
        *self < Self::zero()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn powi(&self, exp: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..exp {
            out = out * self;
        }
        out
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tolerance() -> Self {
        1e-9
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            if d == 0.0 {
                return None;
            }
            return Some(n / d);
        }
        s.parse().ok().filter(|x: &f64| x.is_finite())
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn to_exact_string(&self) -> String {
        format!("{self:?}")
    }

    fn powi(&self, exp: u32) -> Self {
        f64::powi(*self, exp as i32)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tolerance() -> Self {
        Self::zero()
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        parse_rational(s)
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_exact_string(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
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
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = all_digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_strings_exactly() {
        assert_eq!(Rational::parse_decimal("0.3"), Some(Rational::from_ratio(3, 10)));
        assert_eq!(Rational::parse_decimal("-1.25"), Some(Rational::from_ratio(-5, 4)));
        assert_eq!(Rational::parse_decimal("1/3"), Some(Rational::from_ratio(1, 3)));
        assert_eq!(Rational::parse_decimal("2.5e-3"), Some(Rational::from_ratio(1, 400)));
        assert_eq!(Rational::parse_decimal("7"), Some(Rational::from_ratio(7, 1)));
        assert_eq!(Rational::parse_decimal("abc"), None);
        assert_eq!(Rational::parse_decimal("1/0"), None);
        assert_eq!(f64::parse_decimal("1/4"), Some(0.25));
    }

    #[test]
    fn exact_string_round_trips() {
        let x = Rational::from_ratio(-22, 7);
        assert_eq!(Rational::parse_decimal(&x.to_exact_string()), Some(x));
        let y = 0.1_f64;
        assert_eq!(f64::parse_decimal(&y.to_exact_string()), Some(y));
    }

    #[test]
    fn from_f64_is_exact_binary_value() {
        let half = Rational::from_f64(0.5);
        assert_eq!(half, Rational::from_ratio(1, 2));
        assert_ne!(Rational::from_f64(0.1), Rational::from_ratio(1, 10));
    }
}
