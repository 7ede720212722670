//! Scalars used by the curve algebra and the dynamics engine.
//!
//! Exact mode runs on arbitrary-precision rationals. Float mode runs the same
//! algorithms on `f64` with a small relative tolerance for ties and merges.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with a positive denominator.
pub type ExactNumber = BigRational;

/// Relative tolerance used by float mode for ties, collinearity and clearing checks.
pub const FLOAT_REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected exact or float)"
            ))),
        }
    }
}

/// Numeric field the curve algebra is generic over.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(x: i64) -> Self;
    fn from_exact(x: &ExactNumber) -> Self;
    fn to_exact(&self) -> ExactNumber;
    fn to_f64(&self) -> f64;

    /// Equality for ties and merges: exact in exact mode, relative in float mode.
    fn near(&self, other: &Self) -> bool;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Clamps tiny float round-off below zero; identity in exact mode.
    fn clamp_nonneg(self) -> Self {
        if self.is_negative() {
            Self::zero()
        } else {
            self
        }
    }

    fn half() -> Self {
        Self::one() / Self::from_i64(2)
    }
}

impl Scalar for ExactNumber {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }

    fn one() -> Self {
        <BigRational as One>::one()
    }

    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }

    fn from_exact(x: &ExactNumber) -> Self {
        x.clone()
    }

    fn to_exact(&self) -> ExactNumber {
        self.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn near(&self, other: &Self) -> bool {
        self == other
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_i64(x: i64) -> Self {
        x as f64
    }

    fn from_exact(x: &ExactNumber) -> Self {
        ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
    }

    fn to_exact(&self) -> ExactNumber {
        BigRational::from_float(*self).unwrap_or_else(<BigRational as Zero>::zero)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn near(&self, other: &Self) -> bool {
        let scale = f64::abs(*self).max(f64::abs(*other));
        f64::abs(self - other) <= FLOAT_REL_TOL * scale
    }
}

pub fn int(x: i64) -> ExactNumber {
    <ExactNumber as Scalar>::from_i64(x)
}

pub fn ratio(numer: i64, denom: i64) -> ExactNumber {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `"7/24"`, `"-3"`, `"0.125"`, `"1e-6"` or `"2.5E+3"` without rounding.
pub fn parse_exact(text: &str) -> Result<ExactNumber> {
    let s = text.trim();
    let bad = || Error::Parse {
        line: 0,
        msg: format!("not a rational number: `{text}`"),
    };
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole
        .bytes()
        .chain(frac.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let mut numer = BigInt::from_str(&joined).map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac.len() as i64;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Canonical exact string: `"7/24"`, or `"3"` for integers.
pub fn exact_string(x: &ExactNumber) -> String {
    x.to_string()
}

/// Decimal rendering rounded to `sig` significant digits (half away from zero),
/// plain notation, trailing zeros stripped.
pub fn decimal_string(x: &ExactNumber, sig: usize) -> String {
    if Zero::is_zero(x) {
        return "0".to_string();
    }
    let negative = Signed::is_negative(x);
    let magnitude = Signed::abs(x);
    let ten = BigRational::from_integer(BigInt::from(10));
    // exponent e with 10^e <= |x| < 10^(e+1)
    let mut e: i64 =
        (magnitude.numer().bits() as i64 - magnitude.denom().bits() as i64) * 30103 / 100000;
    let pow10 = |k: i64| -> BigRational {
        if k >= 0 {
            num_traits::pow(ten.clone(), k as usize)
        } else {
            <BigRational as One>::one() / num_traits::pow(ten.clone(), (-k) as usize)
        }
    };
    while pow10(e) > magnitude {
        e -= 1;
    }
    while pow10(e + 1) <= magnitude {
        e += 1;
    }
    let shift = sig as i64 - 1 - e;
    let scaled = magnitude * pow10(shift);
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let mut digits = q;
    if r * BigInt::from(2) >= *scaled.denom() {
        digits += 1;
    }
    let mut shift = shift;
    if digits == num_traits::pow(BigInt::from(10), sig) {
        digits /= 10;
        shift -= 1;
    }
    let mut text = digits.to_string();
    let out = if shift <= 0 {
        text.extend(std::iter::repeat_n('0', (-shift) as usize));
        text
    } else {
        let shift = shift as usize;
        if text.len() <= shift {
            let pad = "0".repeat(shift - text.len());
            let frac = format!("{pad}{text}");
            format!("0.{}", frac.trim_end_matches('0'))
        } else {
            let (w, f) = text.split_at(text.len() - shift);
            let f = f.trim_end_matches('0');
            if f.is_empty() {
                w.to_string()
            } else {
                format!("{w}.{f}")
            }
        }
    };
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

/// Serde adapter writing an [`ExactNumber`] as `"7/24"` and reading strings or JSON numbers.
pub mod serde_exact {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{exact_string, parse_exact, ExactNumber};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Number(serde_json::Number),
    }

    pub fn serialize<S: Serializer>(x: &ExactNumber, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&exact_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<ExactNumber, D::Error> {
        let text = match Raw::deserialize(deserializer)? {
            Raw::Text(s) => s,
            Raw::Number(n) => n.to_string(),
        };
        parse_exact(&text).map_err(D::Error::custom)
    }
}

/// Decimal form with 17 significant digits, used by every CSV/JSON emitter.
pub fn decimal17<S: Scalar>(x: &S) -> String {
    decimal_string(&x.to_exact(), 17)
}
