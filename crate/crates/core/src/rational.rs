//! Exact non-negative rationals for bandwidths, capacities and congestion.
//!
//! Every value is stored reduced as `num / den` with 64-bit parts. Comparison
//! cross-multiplies in 128 bits, so ordering never rounds and never overflows.
//! Arithmetic is checked: callers get `None` when a reduced result does not
//! fit in 64 bits.

use std::cmp::Ordering;
use std::fmt;
use std::num::NonZeroU64;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("number `{0}` does not fit in 64-bit rational")]
    Overflow(String),
}

pub(crate) fn gcd_u128(a: u128, b: u128) -> u128 {
    if let (Ok(a), Ok(b)) = (u64::try_from(a), u64::try_from(b)) {
        return gcd_u64(a, b) as u128;
    }
    let (mut a, mut b) = (a, b);
    if a == 0 || b == 0 {
        return a | b;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 || b == 0 {
        return a | b;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

/// A reduced non-negative fraction.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: u64,
    den: NonZeroU64,
}

impl Rational {
    pub const ZERO: Rational = Rational {
        num: 0,
        den: NonZeroU64::MIN,
    };
    pub const ONE: Rational = Rational {
        num: 1,
        den: NonZeroU64::MIN,
    };

    pub fn from_integer(n: u64) -> Self {
        Rational {
            num: n,
            den: NonZeroU64::MIN,
        }
    }

    /// Builds `num / den`, reducing it. `None` if `den == 0`.
    pub fn new(num: u64, den: u64) -> Option<Self> {
        Self::from_u128(num as u128, den as u128)
    }

    /// Reduces a 128-bit fraction and narrows it to 64-bit parts.
    pub fn from_u128(num: u128, den: u128) -> Option<Self> {
        if den == 0 {
            return None;
        }
        if num == 0 {
            return Some(Self::ZERO);
        }
        let (n, d) = match (u64::try_from(num), u64::try_from(den)) {
            (Ok(n), Ok(d)) => {
                let g = gcd_u64(n, d);
                (n / g, d / g)
            }
            _ => {
                let g = gcd_u128(num, den);
                (u64::try_from(num / g).ok()?, u64::try_from(den / g).ok()?)
            }
        };
        Some(Rational {
            num: n,
            den: NonZeroU64::new(d)?,
        })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den.get()
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        let (a, b) = (self.denom(), rhs.denom());
        let g = gcd_u64(a, b) as u128;
        let l = (a as u128 / g) * b as u128;
        let num = (self.num as u128 * (l / a as u128))
            .checked_add(rhs.num as u128 * (l / b as u128))?;
        Self::from_u128(num, l)
    }

    /// `None` on underflow as well as overflow.
    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        let (a, b) = (self.denom(), rhs.denom());
        let g = gcd_u64(a, b) as u128;
        let l = (a as u128 / g) * b as u128;
        let lhs = self.num as u128 * (l / a as u128);
        let rhs = rhs.num as u128 * (l / b as u128);
        Self::from_u128(lhs.checked_sub(rhs)?, l)
    }

    pub fn checked_mul(self, rhs: Self) -> Option<Self> {
        let num = self.num as u128 * rhs.num as u128;
        let den = self.denom() as u128 * rhs.denom() as u128;
        Self::from_u128(num, den)
    }

    /// `None` when dividing by zero or on overflow.
    pub fn checked_div(self, rhs: Self) -> Option<Self> {
        if rhs.num == 0 {
            return None;
        }
        let inv = Rational {
            num: rhs.denom(),
            den: NonZeroU64::new(rhs.num)?,
        };
        self.checked_mul(inv)
    }

    pub fn checked_mul_int(self, k: u64) -> Option<Self> {
        self.checked_mul(Self::from_integer(k))
    }

    pub fn checked_div_int(self, k: u64) -> Option<Self> {
        self.checked_div(Self::from_integer(k))
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den.get() as f64
    }

    /// Largest integer `q` with `q <= self * scale`.
    pub fn floor_scaled(&self, scale: u64) -> u128 {
        self.num as u128 * scale as u128 / self.den.get() as u128
    }

    /// Exact decimal expansion when the denominator is of the form 2^a 5^b
    /// and the expansion fits; `None` otherwise.
    fn decimal_repr(&self) -> Option<String> {
        let mut d = self.denom();
        let (mut twos, mut fives) = (0u32, 0u32);
        while d % 2 == 0 {
            d /= 2;
            twos += 1;
        }
        while d % 5 == 0 {
            d /= 5;
            fives += 1;
        }
        if d != 1 {
            return None;
        }
        let digits = twos.max(fives);
        let scale = 10u128.checked_pow(digits)?;
        let scaled = (self.num as u128).checked_mul(scale / self.denom() as u128)?;
        if digits == 0 {
            return Some(scaled.to_string());
        }
        let int = scaled / scale;
        let frac = scaled % scale;
        Some(format!("{int}.{frac:0width$}", width = digits as usize))
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as u128 * other.den.get() as u128;
        let rhs = other.num as u128 * self.den.get() as u128;
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Self::from_integer(n)
    }
}

impl fmt::Display for Rational {
    /// Terminating values print as exact decimals, others as `p/q`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.decimal_repr() {
            Some(s) => f.write_str(&s),
            None => write!(f, "{}/{}", self.num, self.den),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `"12"`, `"0.125"` and `"3/8"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        let invalid = || ParseRationalError::Invalid(s.to_string());
        let overflow = || ParseRationalError::Overflow(s.to_string());
        let parse_digits = |t: &str| -> Result<u64, ParseRationalError> {
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(invalid());
            }
            t.parse::<u64>().map_err(|_| overflow())
        };

        if let Some((n, d)) = s.split_once('/') {
            let n = parse_digits(n.trim())?;
            let d = parse_digits(d.trim())?;
            if d == 0 {
                return Err(ParseRationalError::ZeroDenominator(s.to_string()));
            }
            return Rational::new(n, d).ok_or_else(overflow);
        }

        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return Err(invalid());
        }
        let int_v = if int.is_empty() { 0 } else { parse_digits(int)? };
        if frac.is_empty() {
            if s.ends_with('.') {
                return Err(invalid());
            }
            return Ok(Rational::from_integer(int_v));
        }
        if frac.len() > 18 {
            return Err(overflow());
        }
        let frac_v = parse_digits(frac)?;
        let scale = 10u128.pow(frac.len() as u32);
        let num = int_v as u128 * scale + frac_v as u128;
        Rational::from_u128(num, scale).ok_or_else(overflow)
    }
}

/// Link capacity: a positive bandwidth or unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Capacity {
    Finite(Rational),
    Unbounded,
}

impl Capacity {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Capacity::Unbounded)
    }

    pub fn finite(&self) -> Option<Rational> {
        match self {
            Capacity::Finite(r) => Some(*r),
            Capacity::Unbounded => None,
        }
    }

    /// Congestion of a link carrying `flow`. Unbounded links are never congested.
    pub fn load_ratio(&self, flow: Rational) -> Option<Rational> {
        match self {
            Capacity::Unbounded => Some(Rational::ZERO),
            Capacity::Finite(c) => flow.checked_div(*c),
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(r) => r.fmt(f),
            Capacity::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl FromStr for Capacity {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("unbounded") {
            Ok(Capacity::Unbounded)
        } else {
            s.parse().map(Capacity::Finite)
        }
    }
}

/// A congestion value, or the marker for "no slot-respecting placement".
///
/// `Infeasible` orders above every finite value so `min`/`max` treat it like
/// positive infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Congestion {
    Finite(Rational),
    Infeasible,
}

impl Congestion {
    pub const ZERO: Congestion = Congestion::Finite(Rational::ZERO);

    pub fn finite(&self) -> Option<Rational> {
        match self {
            Congestion::Finite(r) => Some(*r),
            Congestion::Infeasible => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Congestion::Finite(_))
    }
}

impl From<Rational> for Congestion {
    fn from(r: Rational) -> Self {
        Congestion::Finite(r)
    }
}

impl fmt::Display for Congestion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Congestion::Finite(r) => r.fmt(f),
            Congestion::Infeasible => f.write_str("infeasible"),
        }
    }
}

struct NumberVisitor;

impl serde::de::Visitor<'_> for NumberVisitor {
    type Value = String;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a decimal string, a fraction string or a non-negative integer")
    }

    fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<String, E> {
        Ok(v.to_string())
    }

    fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<String, E> {
        Ok(v.to_string())
    }

    fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<String, E> {
        Ok(v.to_string())
    }
}

impl serde::Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = d.deserialize_any(NumberVisitor)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl serde::Serialize for Capacity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Capacity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = d.deserialize_any(NumberVisitor)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(r("10"), Rational::from_integer(10));
        assert_eq!(r("0.5"), Rational::new(1, 2).unwrap());
        assert_eq!(r(".25"), Rational::new(1, 4).unwrap());
        assert_eq!(r("6/4"), Rational::new(3, 2).unwrap());
        assert_eq!(r("1.000000"), Rational::ONE);
        assert!("".parse::<Rational>().is_err());
        assert!("-1".parse::<Rational>().is_err());
        assert!("1e3".parse::<Rational>().is_err());
        assert!("1/0".parse::<Rational>().is_err());
        assert!("3.".parse::<Rational>().is_err());
    }

    #[test]
    fn display_is_exact() {
        assert_eq!(r("0.5").to_string(), "0.5");
        assert_eq!(r("12.125").to_string(), "12.125");
        assert_eq!(r("100").to_string(), "100");
        assert_eq!(r("1/3").to_string(), "1/3");
        assert_eq!(r("50/3").to_string(), "50/3");
        assert_eq!(r("0").to_string(), "0");
    }

    #[test]
    fn capacity_parsing() {
        assert_eq!("unbounded".parse::<Capacity>().unwrap(), Capacity::Unbounded);
        assert_eq!(
            "40".parse::<Capacity>().unwrap(),
            Capacity::Finite(Rational::from_integer(40))
        );
        assert_eq!(
            Capacity::Unbounded.load_ratio(Rational::from_integer(7)),
            Some(Rational::ZERO)
        );
    }

    #[test]
    fn infeasible_orders_last() {
        let big = Congestion::Finite(Rational::from_integer(u64::MAX));
        assert!(big < Congestion::Infeasible);
        assert_eq!(Congestion::ZERO.max(Congestion::Infeasible), Congestion::Infeasible);
    }

    #[test]
    fn sub_underflow_is_none() {
        assert_eq!(r("1/3").checked_sub(r("1/2")), None);
        assert_eq!(r("1/2").checked_sub(r("1/3")), Some(r("1/6")));
    }

    proptest! {
        #[test]
        fn arithmetic_matches_cross_multiplication(
            a in 0u64..1_000_000, b in 1u64..1_000_000,
            c in 0u64..1_000_000, d in 1u64..1_000_000,
        ) {
            let x = Rational::new(a, b).unwrap();
            let y = Rational::new(c, d).unwrap();
            let sum = x.checked_add(y).unwrap();
            prop_assert_eq!(sum, Rational::from_u128(a as u128 * d as u128 + c as u128 * b as u128, b as u128 * d as u128).unwrap());
            prop_assert_eq!(x.cmp(&y), (a as u128 * d as u128).cmp(&(c as u128 * b as u128)));
            if c > 0 {
                prop_assert_eq!(x.checked_div(y).unwrap().checked_mul(y).unwrap(), x);
            }
            prop_assert_eq!(sum.checked_sub(y).unwrap(), x);
        }

        #[test]
        fn display_round_trips(a in 0u64..10_000_000, b in 1u64..100_000) {
            let x = Rational::new(a, b).unwrap();
            prop_assert_eq!(x.to_string().parse::<Rational>().unwrap(), x);
        }
    }
}
