//! Exact fixed-point voting weights.
//!
//! Token balances are published with many fractional digits (18 is the
//! common ERC-20 convention). A [`Weight`] stores the integer count of the
//! smallest unit, so sums are exact and order-independent. The decimal scale
//! lives on the owning [`VotingTranscript`](crate::VotingTranscript) and is
//! uniform across all of its weights.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of fractional digits used when no scale is configured.
pub const DEFAULT_SCALE: u32 = 18;

/// Largest scale representable in a `u128` unit count.
pub const MAX_SCALE: u32 = 38;

/// A non-negative weight stored as an exact count of `10^-scale` units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weight(u128);

#[inline]
pub(crate) fn pow10(exp: u32) -> u128 {
    10u128.pow(exp)
}

impl Weight {
    pub const ZERO: Weight = Weight(0);

    pub const fn from_units(units: u128) -> Self {
        Weight(units)
    }

    pub const fn units(self) -> u128 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Whole-token weight, e.g. `Weight::from_integer(3, 18)` is `3.0`.
    pub fn from_integer(value: u64, scale: u32) -> Result<Self> {
        check_scale(scale)?;
        (value as u128)
            .checked_mul(pow10(scale))
            .map(Weight)
            .ok_or(Error::WeightOverflow)
    }

    /// Parses a plain decimal string (`"1"`, `"3.5"`, `".25"`) at the given
    /// scale. Signs, exponents and digits beyond the scale are rejected so
    /// parsing never rounds.
    pub fn parse(input: &str, scale: u32) -> Result<Self> {
        check_scale(scale)?;
        let bad = |reason| Error::InvalidWeight {
            input: input.to_owned(),
            reason,
        };
        let s = input.trim();
        if s.is_empty() {
            return Err(bad("empty string"));
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad("no digits"));
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("expected an unsigned decimal number"));
        }
        let frac_digits = frac_part.trim_end_matches('0');
        if frac_digits.len() > scale as usize {
            return Err(bad("more fractional digits than the configured scale"));
        }

        let mut units: u128 = 0;
        for b in int_part.bytes() {
            units = units
                .checked_mul(10)
                .and_then(|u| u.checked_add((b - b'0') as u128))
                .ok_or(Error::WeightOverflow)?;
        }
        units = units.checked_mul(pow10(scale)).ok_or(Error::WeightOverflow)?;
        let mut frac: u128 = 0;
        for b in frac_digits.bytes() {
            frac = frac * 10 + (b - b'0') as u128;
        }
        frac *= pow10(scale - frac_digits.len() as u32);
        units.checked_add(frac).map(Weight).ok_or(Error::WeightOverflow)
    }

    /// Canonical decimal form: no trailing fractional zeros, no trailing dot.
    pub fn to_decimal_string(self, scale: u32) -> String {
        let unit = pow10(scale);
        let int = self.0 / unit;
        let frac = self.0 % unit;
        if frac == 0 {
            return int.to_string();
        }
        let digits = format!("{:0width$}", frac, width = scale as usize);
        format!("{}.{}", int, digits.trim_end_matches('0'))
    }

    /// Lossy conversion for the floating-point parts of the toolkit.
    pub fn to_f64(self, scale: u32) -> f64 {
        let unit = pow10(scale);
        let int = (self.0 / unit) as f64;
        let frac = (self.0 % unit) as f64 / unit as f64;
        int + frac
    }

    pub fn checked_add(self, rhs: Weight) -> Option<Weight> {
        self.0.checked_add(rhs.0).map(Weight)
    }

    pub fn checked_sub(self, rhs: Weight) -> Option<Weight> {
        self.0.checked_sub(rhs.0).map(Weight)
    }
}

fn check_scale(scale: u32) -> Result<()> {
    if scale > MAX_SCALE {
        return Err(Error::param("scale", format!("{scale} exceeds {MAX_SCALE}")));
    }
    Ok(())
}

// Plain `+` panics on overflow; ingestion uses `checked_add` and guarantees
// totals fit before any arithmetic on them happens.
impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0.checked_add(rhs.0).expect("weight overflow"))
    }
}

impl AddAssign for Weight {
    fn add_assign(&mut self, rhs: Weight) {
        *self = *self + rhs;
    }
}

impl Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Weight> for Weight {
    fn sum<I: Iterator<Item = &'a Weight>>(iter: I) -> Weight {
        iter.copied().sum()
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} units", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_plain_decimals() {
        assert_eq!(Weight::parse("3.5", 1).unwrap().units(), 35);
        assert_eq!(Weight::parse("1", 18).unwrap().units(), 10u128.pow(18));
        assert_eq!(Weight::parse(".25", 2).unwrap().units(), 25);
        assert_eq!(Weight::parse("2.", 3).unwrap().units(), 2000);
        assert_eq!(Weight::parse("1.10", 1).unwrap().units(), 11);
    }

    #[test]
    fn rejects_lossy_or_malformed_input() {
        assert!(Weight::parse("1.25", 1).is_err());
        assert!(Weight::parse("-1", 18).is_err());
        assert!(Weight::parse("1e5", 18).is_err());
        assert!(Weight::parse("", 18).is_err());
        assert!(Weight::parse(".", 18).is_err());
        assert_eq!(
            Weight::parse("999999999999999999999", 18),
            Err(Error::WeightOverflow)
        );
        assert!(Weight::parse("1", 39).is_err());
    }

    #[test]
    fn canonical_strings() {
        assert_eq!(Weight::from_units(35).to_decimal_string(1), "3.5");
        assert_eq!(Weight::from_units(1_100).to_decimal_string(3), "1.1");
        assert_eq!(Weight::from_units(7).to_decimal_string(3), "0.007");
        assert_eq!(Weight::from_units(4000).to_decimal_string(3), "4");
        assert_eq!(Weight::ZERO.to_decimal_string(18), "0");
    }

    #[test]
    fn converts_to_float() {
        let w = Weight::parse("2.3", 18).unwrap();
        assert!((w.to_f64(18) - 2.3).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn canonical_string_round_trips(units in any::<u64>(), scale in 0u32..=18) {
            let w = Weight::from_units(units as u128);
            let s = w.to_decimal_string(scale);
            prop_assert_eq!(Weight::parse(&s, scale).unwrap(), w);
            prop_assert_eq!(Weight::parse(&s, scale).unwrap().to_decimal_string(scale), s);
        }

        #[test]
        fn sums_are_order_independent(mut xs in proptest::collection::vec(any::<u64>(), 0..20)) {
            let forward: Weight = xs.iter().map(|&x| Weight::from_units(x as u128)).sum();
            xs.reverse();
            let backward: Weight = xs.iter().map(|&x| Weight::from_units(x as u128)).sum();
            prop_assert_eq!(forward, backward);
        }
    }
}
