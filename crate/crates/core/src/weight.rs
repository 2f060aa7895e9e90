//! Frequency arithmetic shared by the exact and floating-point engines.
//!
//! Block frequencies, paintbox values and dust are all carried as a
//! [`Weight`]. Dirac measures with a rational atom run on [`BigRational`]
//! so that events such as `f1[1] = 5/8` can be matched exactly; every other
//! measure runs on `f64`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

/// Absolute tolerance used for identities checked in float mode.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LiteralError {
    #[error("empty number literal")]
    Empty,
    #[error("malformed number literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `3`, `-0.25`, `1/2` or `1e-3` into an exact rational.
///
/// Decimal literals are read exactly (`0.1` is `1/10`), so `dirac:0.5` and
/// `dirac:1/2` describe the same measure.
pub fn parse_rational(literal: &str) -> Result<BigRational, LiteralError> {
    let s = literal.trim();
    if s.is_empty() {
        return Err(LiteralError::Empty);
    }
    let malformed = || LiteralError::Malformed(s.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| malformed())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| malformed())?;
        if den.is_zero() {
            return Err(LiteralError::ZeroDenominator(s.to_string()));
        }
        return Ok(BigRational::new(num, den));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp = s[pos + 1..].parse::<i32>().map_err(|_| malformed())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(malformed());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(&digits).map_err(|_| malformed())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Renders a rational as `num/den`, or just `num` for integers.
pub fn format_rational(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Nearest `f64` to an exact rational, robust to numerators and
/// denominators that overflow `f64` on their own.
pub fn rational_to_f64(value: &BigRational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(value) {
        if v.is_finite() {
            return v;
        }
    }
    let sign = if value.is_negative() { -1.0 } else { 1.0 };
    let num = value.numer().abs();
    let den = value.denom().clone();
    let shift = num.bits() as i64 - den.bits() as i64;
    // Bring the quotient into [2^-60, 2^60] before converting.
    let (n, d) = if shift > 0 {
        (num, den << (shift as usize))
    } else {
        (num << ((-shift) as usize), den)
    };
    let scaled = BigRational::new(n << 64usize, d).to_integer();
    sign * ToPrimitive::to_f64(&scaled).unwrap_or(f64::NAN) * 2f64.powi((shift - 64) as i32)
}

/// Arithmetic carried by the coalescent engine.
pub trait Weight: Clone + PartialEq + PartialOrd + fmt::Debug + Send + Sync + 'static {
    /// Whether identities hold exactly for this representation.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    /// `num / den` (rounded for floats).
    fn from_ratio(num: i64, den: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn to_f64(&self) -> f64;

    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool;

    /// `1 - self`.
    fn complement(&self) -> Self {
        Self::one().sub(self)
    }

    /// Equality used by invariant checks: exact for rationals,
    /// within [`FLOAT_TOLERANCE`] for floats.
    fn matches(&self, other: &Self) -> bool;

    /// One Bernoulli(`self`) coin. Both representations consume a single
    /// `u64` per coin (none when the probability is 0 or 1), so an exact and
    /// a float run on the same stream flip identical coins.
    fn coin<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random_bool(self.to_f64().clamp(0.0, 1.0))
    }

    /// Text form used in tables: `num/den` for rationals, shortest
    /// round-trip decimal for floats.
    fn render(&self) -> String;
}

impl Weight for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_one(&self) -> bool {
        *self == 1.0
    }
    fn matches(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }
    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Weight for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_one(&self) -> bool {
        One::is_one(self)
    }
    fn matches(&self, other: &Self) -> bool {
        self == other
    }
    fn render(&self) -> String {
        format_rational(self)
    }
}
