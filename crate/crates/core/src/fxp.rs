//! Signed Q7.7 fixed-point arithmetic.
//!
//! A value is a 14-bit two's-complement integer `raw` read as `raw / 128`.
//! The sign bit counts as one of the seven integer bits, so the representable
//! range is `[-64.0, 63.9921875]` in steps of `2^-7`. Every operation rounds to
//! nearest with ties to even and saturates on overflow.

use std::fmt;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of fractional bits.
pub const FRAC_BITS: u32 = 7;
/// Total word width, sign included.
pub const WORD_BITS: u32 = 14;
/// Largest raw value, `2^13 - 1`.
pub const RAW_MAX: i16 = (1 << (WORD_BITS - 1)) - 1;
/// Smallest raw value, `-2^13`.
pub const RAW_MIN: i16 = -(1 << (WORD_BITS - 1));

const SCALE: f64 = (1u32 << FRAC_BITS) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FxError {
    #[error("cannot quantize non-finite value {0}")]
    NonFinite(f64),
    #[error("raw value {0} outside the 14-bit range [{RAW_MIN}, {RAW_MAX}]")]
    RawOutOfRange(i64),
}

/// A Q7.7 scalar.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Fx(i16);

impl Fx {
    pub const ZERO: Fx = Fx(0);
    pub const ONE: Fx = Fx(1 << FRAC_BITS);
    pub const HALF: Fx = Fx(1 << (FRAC_BITS - 1));
    pub const MAX: Fx = Fx(RAW_MAX);
    pub const MIN: Fx = Fx(RAW_MIN);
    /// One unit in the last place, `2^-7`.
    pub const LSB: Fx = Fx(1);

    /// Builds a value from its raw integer, rejecting anything outside 14 bits.
    pub fn from_raw(raw: i64) -> Result<Fx, FxError> {
        if (RAW_MIN as i64..=RAW_MAX as i64).contains(&raw) {
            Ok(Fx(raw as i16))
        } else {
            Err(FxError::RawOutOfRange(raw))
        }
    }

    /// Clamps a wide integer into range.
    pub fn from_raw_saturating(raw: i64) -> Fx {
        Fx(raw.clamp(RAW_MIN as i64, RAW_MAX as i64) as i16)
    }

    #[inline]
    pub const fn raw(self) -> i16 {
        self.0
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE
    }

    /// Nearest representable value, ties to the even raw value, saturating.
    pub fn quantize(x: f64) -> Result<Fx, FxError> {
        if !x.is_finite() {
            return Err(FxError::NonFinite(x));
        }
        if x >= Fx::MAX.to_f64() {
            return Ok(Fx::MAX);
        }
        if x <= Fx::MIN.to_f64() {
            return Ok(Fx::MIN);
        }
        // x * 128 is exact in binary floating point.
        let scaled = (x * SCALE).round_ties_even();
        Ok(Fx::from_raw_saturating(scaled as i64))
    }

    #[inline]
    pub fn saturating_add(self, rhs: Fx) -> Fx {
        Fx::from_raw_saturating(self.0 as i64 + rhs.0 as i64)
    }

    /// Exact 28-bit product, one round-to-nearest-even step, then saturation.
    #[inline]
    pub fn saturating_mul(self, rhs: Fx) -> Fx {
        let product = self.0 as i32 * rhs.0 as i32;
        let mut quotient = product >> FRAC_BITS;
        let remainder = product & ((1 << FRAC_BITS) - 1);
        let half = 1 << (FRAC_BITS - 1);
        if remainder > half || (remainder == half && quotient & 1 == 1) {
            quotient += 1;
        }
        Fx::from_raw_saturating(quotient as i64)
    }

    #[inline]
    pub fn relu(self) -> Fx {
        if self.0 < 0 {
            Fx::ZERO
        } else {
            self
        }
    }

    /// `0` below -4, `1` above +4, `a/8 + 1/2` in between.
    pub fn hard_sigmoid(self) -> Fx {
        const EDGE: i16 = 4 << FRAC_BITS;
        const EIGHTH: Fx = Fx(1 << (FRAC_BITS - 3));
        if self.0 <= -EDGE {
            Fx::ZERO
        } else if self.0 >= EDGE {
            Fx::ONE
        } else {
            EIGHTH.saturating_mul(self).saturating_add(Fx::HALF)
        }
    }

    /// Every representable value in ascending order.
    pub fn all() -> impl Iterator<Item = Fx> {
        (RAW_MIN..=RAW_MAX).map(Fx)
    }
}

impl Add for Fx {
    type Output = Fx;
    fn add(self, rhs: Fx) -> Fx {
        self.saturating_add(rhs)
    }
}

impl Mul for Fx {
    type Output = Fx;
    fn mul(self, rhs: Fx) -> Fx {
        self.saturating_mul(rhs)
    }
}

impl TryFrom<i64> for Fx {
    type Error = FxError;
    fn try_from(raw: i64) -> Result<Self, Self::Error> {
        Fx::from_raw(raw)
    }
}

impl From<Fx> for i64 {
    fn from(v: Fx) -> i64 {
        v.0 as i64
    }
}

impl fmt::Debug for Fx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fx({} = {})", self.0, self.to_f64())
    }
}

impl fmt::Display for Fx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}
