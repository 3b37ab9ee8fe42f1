//! Scalar abstraction shared by the polynomial, limit and regularity code.
//!
//! Everything that manipulates limit functions is written against [`Scalar`],
//! so the same routines run in exact rational arithmetic (the default, see
//! [`crate::Rational`]) or in floating point when speed matters more than
//! exactness.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_bigint(n: &BigInt) -> Self;

    fn from_rational(q: &BigRational) -> Self;

    fn as_f64(&self) -> f64;

    fn from_f64_lossy(x: f64) -> Self;

    /// The simplest exact value in `[lo, hi]`, if the type can represent one.
    fn simplest_between(_lo: &Self, _hi: &Self) -> Option<Self> {
        None
    }

    /// Bracket width at which root refinement may stop; `None` refines until
    /// the representation runs out of precision.
    fn root_resolution(_coeffs: &[Self]) -> Option<Self> {
        None
    }

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_bigint(n: &BigInt) -> Self {
        BigRational::from_integer(n.clone())
    }

    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn as_f64(&self) -> f64 {
        ratio_to_f64(self)
    }

    fn from_f64_lossy(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).unwrap_or_else(BigRational::zero)
    }

    fn simplest_between(lo: &Self, hi: &Self) -> Option<Self> {
        Some(simplest_rational(lo, hi))
    }

    fn root_resolution(coeffs: &[Self]) -> Option<Self> {
        Some(crate::poly::rational_root_resolution(coeffs))
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn from_bigint(n: &BigInt) -> Self {
                n.to_f64().unwrap_or(f64::INFINITY) as $t
            }

            fn from_rational(q: &BigRational) -> Self {
                ratio_to_f64(q) as $t
            }

            fn as_f64(&self) -> f64 {
                *self as f64
            }

            fn from_f64_lossy(x: f64) -> Self {
                x as $t
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

/// Converts a big rational to the nearest-ish double without overflowing on
/// huge numerators and denominators.
pub fn ratio_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let shift = q.numer().bits().max(q.denom().bits()) as i64 - 60;
    let (n, d) = if shift > 0 {
        (q.numer() >> shift as usize, q.denom() >> shift as usize)
    } else {
        (q.numer().clone(), q.denom().clone())
    };
    let d = if d.is_zero() { BigInt::one() } else { d };
    n.to_f64().unwrap_or(0.0) / d.to_f64().unwrap_or(1.0)
}

/// Stern–Brocot search for the rational with smallest denominator in `[lo, hi]`.
pub fn simplest_rational(lo: &BigRational, hi: &BigRational) -> BigRational {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    if lo.is_negative() && hi.is_positive() || lo.is_zero() || hi.is_zero() {
        return BigRational::zero();
    }
    if hi.is_negative() {
        return -simplest_rational(&-hi.clone(), &-lo.clone());
    }
    let floor = lo.floor();
    if &floor == lo {
        return floor;
    }
    let next = &floor + BigRational::one();
    if &next <= hi {
        return next;
    }
    let inner = simplest_rational(&(hi - &floor).recip(), &(lo - &floor).recip());
    floor + inner.recip()
}

/// Parses `"3"`, `"-3/4"` or a decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str_radix(n.trim(), 10).map_err(|_| bad())?;
        let d = BigInt::from_str_radix(d.trim(), 10).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let n = BigInt::from_str_radix(&digits, 10).map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10u32), frac.len());
        let q = BigRational::new(n, d);
        return Ok(if negative { -q } else { q });
    }
    BigInt::from_str_radix(s, 10)
        .map(BigRational::from_integer)
        .map_err(|_| bad())
}

/// Canonical lowest-terms text form: `"n"` or `"n/d"`.
pub fn format_rational(q: &BigRational) -> String {
    q.to_string()
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("6/8").unwrap(), q(3, 4));
        assert_eq!(parse_rational("-0.25").unwrap(), q(-1, 4));
        assert_eq!(parse_rational(" 7 ").unwrap(), q(7, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert_eq!(format_rational(&q(6, 8)), "3/4");
        assert_eq!(format_rational(&q(2, 1)), "2");
    }

    #[test]
    fn simplest_rational_finds_small_denominators() {
        assert_eq!(simplest_rational(&q(3, 10), &q(2, 5)), q(1, 3));
        assert_eq!(simplest_rational(&q(1, 2), &q(1, 2)), q(1, 2));
        assert_eq!(simplest_rational(&q(-2, 5), &q(-3, 10)), q(-1, 3));
        assert_eq!(simplest_rational(&q(-1, 5), &q(1, 5)), q(0, 1));
        assert_eq!(simplest_rational(&q(7, 5), &q(8, 5)), q(3, 2));
    }

    #[test]
    fn huge_ratio_to_f64() {
        let big = num_traits::pow(BigInt::from(10), 400);
        let r = BigRational::new(big.clone() * 3, big);
        assert!((ratio_to_f64(&r) - 3.0).abs() < 1e-12);
    }
}
