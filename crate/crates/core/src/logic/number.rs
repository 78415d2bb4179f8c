//! Exact numeric literals. Reals are scaled integers, never binary floats.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A non-negative exact decimal `mantissa / 10^scale`.
///
/// Normalized so that `scale >= 1` and the last fractional digit is nonzero
/// unless `scale == 1`; `50.00` and `50.0` are the same literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decimal {
    mantissa: BigUint,
    scale: u32,
}

impl Decimal {
    pub fn new(mantissa: BigUint, scale: u32) -> Self {
        let mut d = Decimal { mantissa, scale };
        d.normalize();
        d
    }

    pub fn from_integer(value: BigUint) -> Self {
        Decimal::new(value * BigUint::from(10u32), 1)
    }

    fn normalize(&mut self) {
        let ten = BigUint::from(10u32);
        if self.scale == 0 {
            self.mantissa *= &ten;
            self.scale = 1;
        }
        while self.scale > 1 && (&self.mantissa % &ten).is_zero() {
            self.mantissa /= &ten;
            self.scale -= 1;
        }
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.mantissa.clone()), BigInt::from(BigUint::from(10u32).pow(self.scale)))
    }

    /// Exact conversion from a non-negative rational whose denominator
    /// has no prime factors other than 2 and 5.
    pub fn from_rational(r: &BigRational) -> Option<Self> {
        if r.is_negative() {
            return None;
        }
        let scale = terminating_scale(r.denom())?;
        let factor = BigInt::from(10u32).pow(scale);
        let scaled = r * BigRational::from_integer(factor);
        debug_assert!(scaled.is_integer());
        Some(Decimal::new(scaled.to_integer().to_biguint()?, scale))
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }
}

/// Number of decimal digits needed to print `1/denom` exactly, if finite.
fn terminating_scale(denom: &BigInt) -> Option<u32> {
    let mut d = denom.abs();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut twos, mut fives) = (0u32, 0u32);
    while d.is_even() && !d.is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() && !d.is_zero() {
        d /= &five;
        fives += 1;
    }
    d.is_one().then(|| twos.max(fives))
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.mantissa.to_string();
        let scale = self.scale as usize;
        if digits.len() <= scale {
            write!(f, "0.{}{}", "0".repeat(scale - digits.len()), digits)
        } else {
            let (int, frac) = digits.split_at(digits.len() - scale);
            write!(f, "{int}.{frac}")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDecimalError;

impl FromStr for Decimal {
    type Err = ParseDecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (int, frac) = s.split_once('.').ok_or(ParseDecimalError)?;
        if int.is_empty()
            || frac.is_empty()
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(ParseDecimalError);
        }
        let mantissa: BigUint = format!("{int}{frac}").parse().map_err(|_| ParseDecimalError)?;
        Ok(Decimal::new(mantissa, frac.len() as u32))
    }
}

/// Renders a rational as an exact decimal when it terminates, else `n/d`.
pub fn format_rational(r: &BigRational) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    match Decimal::from_rational(&r.abs()) {
        Some(d) => format!("{sign}{d}"),
        None => format!("{}/{}", r.numer(), r.denom()),
    }
}
