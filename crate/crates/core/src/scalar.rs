//! Number types the map and step-function algebra is generic over.
//!
//! `f64` is the fast float mode; `BigRational` is the exact mode used when all
//! parameters are rational.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Comparison tolerance of the float mode.
pub const FLOAT_TOL: f64 = 1e-12;

pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` for exact arithmetic.
    const EXACT: bool;

    /// Breakpoints closer than this are merged.
    fn merge_tol() -> Self;

    fn ratio(num: i64, den: i64) -> Self;

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite float")
    }

    /// Like `from_f64_lossy`, but the exact mode reads the float's shortest
    /// decimal form, so `0.1` becomes `1/10`.
    fn from_decimal(x: f64) -> Self {
        Self::from_f64_lossy(x)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn half() -> Self {
        Self::ratio(1, 2)
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn midpoint(a: &Self, b: &Self) -> Self {
        (a.clone() + b.clone()) / Self::two()
    }

    /// Equality up to the mode's merge tolerance.
    fn near(a: &Self, b: &Self) -> bool {
        (a.clone() - b.clone()).abs() <= Self::merge_tol()
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

impl Scalar for f64 {
    const EXACT: bool = false;

    fn merge_tol() -> Self {
        FLOAT_TOL
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64_lossy(x: f64) -> Self {
        x
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn merge_tol() -> Self {
        BigRational::zero()
    }

    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn near(a: &Self, b: &Self) -> bool {
        a == b
    }

    fn from_decimal(x: f64) -> Self {
        rational_from_decimal_f64(x)
    }
}

/// `a ≤ b`, exactly in exact mode and up to `float_tol` (relative to
/// `max(1, |b|)`) in float mode.
pub fn leq<S: Scalar>(a: &S, b: &S, float_tol: f64) -> bool {
    if S::EXACT {
        a <= b
    } else {
        let b = b.to_f64_lossy();
        a.to_f64_lossy() <= b + float_tol * b.abs().max(1.0)
    }
}

/// Parses `"p/q"`, an integer, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

/// Shortest decimal literal that round-trips the float, as an exact rational.
///
/// Turns `0.1_f64` into `1/10` rather than its binary expansion.
pub fn rational_from_decimal_f64(x: f64) -> BigRational {
    parse_rational(&format!("{x}")).unwrap_or_else(|| BigRational::from_f64(x).expect("finite"))
}

/// Ceiling that treats values within `1e-9` relative of an integer as that integer.
pub fn snapped_ceil(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as i64
    } else {
        x.ceil() as i64
    }
}
