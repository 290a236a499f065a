//! Scalar types: the [`Real`] abstraction for floating-point math and the
//! fixed-point [`FixedDecimal`] used for every price and volume that must
//! replay bit-identically.

use std::fmt;
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Floating-point scalar for the statistical and model side of the pipeline.
///
/// `f64` is the default lane (see the aliases at the crate root); `f32` is
/// instantiable for memory-bound experiments.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 -> Real conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real -> f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Number of decimal places carried by [`FixedDecimal`].
pub const FIXED_DECIMALS: u32 = 9;

/// Scale factor: one unit is `1 / SCALE`.
pub const FIXED_SCALE: i64 = 1_000_000_000;

/// Signed fixed-point decimal with 9 fractional digits, stored as a scaled
/// `i64`. Prices, sizes and volume deltas all use this type so that replaying
/// the same update stream twice produces bit-identical books on any platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FixedDecimal(i64);

/// Error produced when parsing a decimal string into [`FixedDecimal`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecimalParseError {
    #[error("empty decimal string")]
    Empty,
    #[error("invalid decimal string: {0:?}")]
    Invalid(String),
    #[error("more than {FIXED_DECIMALS} fractional digits: {0:?}")]
    TooPrecise(String),
    #[error("decimal out of range: {0:?}")]
    OutOfRange(String),
}

impl FixedDecimal {
    pub const ZERO: FixedDecimal = FixedDecimal(0);

    /// Builds a value from its raw scaled representation (`raw / 10^9`).
    pub const fn from_raw(raw: i64) -> Self {
        FixedDecimal(raw)
    }

    pub const fn raw(self) -> i64 {
        self.0
    }

    /// Builds a value from an integer number of whole units.
    pub fn from_int(units: i64) -> Self {
        FixedDecimal(units.checked_mul(FIXED_SCALE).expect("fixed-decimal overflow"))
    }

    /// Rounds an `f64` to the nearest representable value. Used only where
    /// quantities originate from float math (e.g. sampled sizes); parsed
    /// inputs go through [`FromStr`] to avoid float drift.
    pub fn from_f64_round(v: f64) -> Self {
        let scaled = (v * FIXED_SCALE as f64).round();
        assert!(
            scaled.is_finite() && scaled >= i64::MIN as f64 && scaled <= i64::MAX as f64,
            "fixed-decimal out of range: {v}"
        );
        FixedDecimal(scaled as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / FIXED_SCALE as f64
    }

    pub fn to_real<F: Real>(self) -> F {
        F::from_f64_lossy(self.to_f64())
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn abs(self) -> Self {
        FixedDecimal(self.0.abs())
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        self.0.checked_add(rhs.0).map(FixedDecimal)
    }

    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        self.0.checked_sub(rhs.0).map(FixedDecimal)
    }

    /// Scales by an integer factor. Panics on overflow.
    pub fn mul_int(self, k: i64) -> Self {
        FixedDecimal(self.0.checked_mul(k).expect("fixed-decimal overflow"))
    }

    /// Midpoint of two values, truncating the odd half-quantum toward zero.
    pub fn midpoint(self, other: Self) -> Self {
        FixedDecimal((self.0 + other.0) / 2)
    }
}

impl std::ops::Add for FixedDecimal {
    type Output = FixedDecimal;
    fn add(self, rhs: Self) -> Self {
        FixedDecimal(self.0.checked_add(rhs.0).expect("fixed-decimal overflow"))
    }
}

impl std::ops::Sub for FixedDecimal {
    type Output = FixedDecimal;
    fn sub(self, rhs: Self) -> Self {
        FixedDecimal(self.0.checked_sub(rhs.0).expect("fixed-decimal overflow"))
    }
}

impl std::ops::Neg for FixedDecimal {
    type Output = FixedDecimal;
    fn neg(self) -> Self {
        FixedDecimal(-self.0)
    }
}

impl Sum for FixedDecimal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let total: i128 = iter.map(|v| v.0 as i128).sum();
        assert!(
            total >= i64::MIN as i128 && total <= i64::MAX as i128,
            "fixed-decimal sum overflow"
        );
        FixedDecimal(total as i64)
    }
}

impl FromStr for FixedDecimal {
    type Err = DecimalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(DecimalParseError::Empty);
        }
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        if body.is_empty() {
            return Err(DecimalParseError::Invalid(s.to_string()));
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(DecimalParseError::Invalid(s.to_string()));
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(DecimalParseError::Invalid(s.to_string()));
        }
        if frac_part.len() > FIXED_DECIMALS as usize {
            // Reject rather than silently round: the ingestion contract uses
            // string decimals precisely to avoid hidden precision loss.
            let tail = &frac_part[FIXED_DECIMALS as usize..];
            if tail.bytes().any(|b| b != b'0') {
                return Err(DecimalParseError::TooPrecise(s.to_string()));
            }
        }
        let int_val: i64 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| DecimalParseError::OutOfRange(s.to_string()))?
        };
        let mut frac_val: i64 = 0;
        for (idx, b) in frac_part.bytes().take(FIXED_DECIMALS as usize).enumerate() {
            let digit = (b - b'0') as i64;
            frac_val += digit * 10_i64.pow(FIXED_DECIMALS - 1 - idx as u32);
        }
        let raw = int_val
            .checked_mul(FIXED_SCALE)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(|| DecimalParseError::OutOfRange(s.to_string()))?;
        Ok(FixedDecimal(if negative { -raw } else { raw }))
    }
}

impl fmt::Display for FixedDecimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let raw = self.0;
        let sign = if raw < 0 { "-" } else { "" };
        let mag = raw.unsigned_abs();
        let int_part = mag / FIXED_SCALE as u64;
        let mut frac = mag % FIXED_SCALE as u64;
        if frac == 0 {
            return write!(f, "{sign}{int_part}");
        }
        let mut digits = FIXED_DECIMALS as usize;
        while frac % 10 == 0 {
            frac /= 10;
            digits -= 1;
        }
        write!(f, "{sign}{int_part}.{frac:0width$}", width = digits)
    }
}

impl Serialize for FixedDecimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FixedDecimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_formats_round_trip() {
        for s in ["0", "1", "100.5", "0.000000001", "-3.25", "12345.678900001"] {
            let v: FixedDecimal = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
    }

    #[test]
    fn parse_normalizes_redundant_forms() {
        assert_eq!("100.50".parse::<FixedDecimal>().unwrap().to_string(), "100.5");
        assert_eq!("007".parse::<FixedDecimal>().unwrap(), FixedDecimal::from_int(7));
        assert_eq!(".5".parse::<FixedDecimal>().unwrap().to_string(), "0.5");
        assert_eq!("5.".parse::<FixedDecimal>().unwrap().to_string(), "5");
        // Trailing zeros beyond the scale are still exact.
        assert_eq!("1.2500000000".parse::<FixedDecimal>().unwrap().to_string(), "1.25");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("".parse::<FixedDecimal>().is_err());
        assert!("abc".parse::<FixedDecimal>().is_err());
        assert!("1.2.3".parse::<FixedDecimal>().is_err());
        assert!("--1".parse::<FixedDecimal>().is_err());
        assert!("1e3".parse::<FixedDecimal>().is_err());
        // 10 significant fractional digits cannot be represented.
        assert!("0.0000000001".parse::<FixedDecimal>().is_err());
    }

    #[test]
    fn arithmetic_is_exact() {
        let a: FixedDecimal = "0.1".parse().unwrap();
        let b: FixedDecimal = "0.2".parse().unwrap();
        assert_eq!((a + b).to_string(), "0.3");
        assert_eq!((b - a).to_string(), "0.1");
        assert_eq!((-a).to_string(), "-0.1");
        assert_eq!(a.mul_int(7).to_string(), "0.7");
    }

    #[test]
    fn midpoint_truncates_half_quantum() {
        let a = FixedDecimal::from_int(100);
        let b = FixedDecimal::from_int(101);
        assert_eq!(a.midpoint(b).to_string(), "100.5");
        let c = FixedDecimal::from_raw(1);
        assert_eq!(FixedDecimal::ZERO.midpoint(c), FixedDecimal::ZERO);
    }

    #[test]
    fn sum_uses_wide_accumulator() {
        let vals = vec![FixedDecimal::from_int(i64::MAX / FIXED_SCALE / 2); 2];
        let total: FixedDecimal = vals.into_iter().sum();
        assert!(total.is_positive());
    }
}
