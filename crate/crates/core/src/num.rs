//! Exact rational numbers.
//!
//! Every quantity a rule compares (budgets, costs, utilities, ρ, α) is a
//! [`Num`]. Values are kept reduced with a positive denominator, so equality
//! is structural and ordering is exact.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use dashu_base::{Abs, Approximation, Sign, UnsignedAbs};
use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact, arbitrary-precision rational number.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Num(RBig);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a number: {0:?}")]
pub struct ParseNumError(pub String);

impl Num {
    pub fn zero() -> Self {
        Num(RBig::ZERO)
    }

    pub fn one() -> Self {
        Num(RBig::ONE)
    }

    /// `numer / denom`. Panics if `denom == 0`.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Num(RBig::from_parts_signed(numer.into(), denom.into()))
    }

    pub fn from_integer(v: i64) -> Self {
        Num(RBig::from(v))
    }

    /// `numer / denom`. Panics if `denom == 0`.
    pub fn from_parts(numer: IBig, denom: UBig) -> Self {
        Num(RBig::from_parts(numer, denom))
    }

    /// The exact binary value of a finite float.
    pub fn from_f64(v: f64) -> Option<Self> {
        RBig::try_from(v).ok().map(Num)
    }

    pub fn numer(&self) -> &IBig {
        self.0.numerator()
    }

    pub fn denom(&self) -> &UBig {
        self.0.denominator()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.0.is_zero() && self.0.sign() == Sign::Positive
    }

    pub fn is_negative(&self) -> bool {
        self.0.sign() == Sign::Negative
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_int()
    }

    pub fn recip(&self) -> Num {
        Num(RBig::ONE / &self.0)
    }

    pub fn floor(&self) -> Num {
        Num(RBig::from(self.0.floor()))
    }

    pub fn ceil(&self) -> Num {
        Num(RBig::from(self.0.ceil()))
    }

    pub fn abs(&self) -> Num {
        Num(self.0.clone().abs())
    }

    pub fn min_of(a: &Num, b: &Num) -> Num {
        if a <= b { a.clone() } else { b.clone() }
    }

    pub fn max_of(a: &Num, b: &Num) -> Num {
        if a >= b { a.clone() } else { b.clone() }
    }

    /// Nearest `f64`; lossy, for reporting and screening only.
    pub fn to_f64(&self) -> f64 {
        match self.0.to_f64() {
            Approximation::Exact(v) | Approximation::Inexact(v, _) => v,
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        if self.is_integer() {
            i64::try_from(self.numer()).ok()
        } else {
            None
        }
    }

    /// Renders as a terminating decimal when the value has one.
    pub fn to_decimal(&self) -> Option<String> {
        let five = UBig::from(5u8);
        let twos = self.denom().trailing_zeros().unwrap_or(0);
        let mut rest = self.denom() >> twos;
        let mut fives = 0usize;
        while (&rest % &five).is_zero() {
            rest /= &five;
            fives += 1;
        }
        if !rest.is_one() {
            return None;
        }
        let places = twos.max(fives);
        if places == 0 {
            return Some(self.numer().to_string());
        }
        let scaled = self.numer() * IBig::from(UBig::from(10u8).pow(places)) / IBig::from(self.denom().clone());
        let digits = format!("{:0>width$}", (&scaled).unsigned_abs(), width = places + 1);
        let (int, frac) = digits.split_at(digits.len() - places);
        let frac = frac.trim_end_matches('0');
        let neg = if scaled.sign() == Sign::Negative { "-" } else { "" };
        Some(format!("{neg}{int}.{frac}"))
    }
}

impl fmt::Display for Num {
    /// Terminating decimals print as decimals, everything else as `p/q`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_int() {
            write!(f, "{}", self.numer())
        } else if let Some(d) = self.to_decimal() {
            f.write_str(&d)
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Num {
    type Err = ParseNumError;

    /// Accepts integers, decimals (`12.50`, `-0.5`, `1e3`) and fractions (`3/7`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || ParseNumError(s.to_string());
        if t.is_empty() {
            return Err(err());
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: IBig = p.trim().parse().map_err(|_| err())?;
            let q: IBig = q.trim().parse().map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            return Ok(Num(RBig::from_parts_signed(p, q)));
        }
        let (mantissa, exp) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
            None => (t, 0),
        };
        let (neg, body) = match mantissa.as_bytes().first() {
            Some(b'-') => (true, &mantissa[1..]),
            Some(b'+') => (false, &mantissa[1..]),
            _ => (false, mantissa),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int}{frac}");
        let mut numer: IBig = if digits.is_empty() { IBig::ZERO } else { digits.parse().map_err(|_| err())? };
        if neg {
            numer = -numer;
        }
        let scale = exp - frac.len() as i32;
        let ten = UBig::from(10u8);
        let value = if scale >= 0 {
            RBig::from(numer * IBig::from(ten.pow(scale as usize)))
        } else {
            RBig::from_parts(numer, ten.pow((-scale) as usize))
        };
        Ok(Num(value))
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Num {
    fn from(v: i64) -> Self {
        Num::from_integer(v)
    }
}

impl From<usize> for Num {
    fn from(v: usize) -> Self {
        Num(RBig::from(v))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $assign_tr:ident, $assign:ident) => {
        impl $tr<Num> for Num {
            type Output = Num;
            fn $method(self, rhs: Num) -> Num {
                Num(self.0.$method(rhs.0))
            }
        }
        impl<'a> $tr<&'a Num> for Num {
            type Output = Num;
            fn $method(self, rhs: &'a Num) -> Num {
                Num(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $tr<Num> for &'a Num {
            type Output = Num;
            fn $method(self, rhs: Num) -> Num {
                Num((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $tr<&'b Num> for &'a Num {
            type Output = Num;
            fn $method(self, rhs: &'b Num) -> Num {
                Num((&self.0).$method(&rhs.0))
            }
        }
        impl $assign_tr<Num> for Num {
            fn $assign(&mut self, rhs: Num) {
                self.0.$assign(rhs.0);
            }
        }
        impl<'a> $assign_tr<&'a Num> for Num {
            fn $assign(&mut self, rhs: &'a Num) {
                self.0.$assign(&rhs.0);
            }
        }
    };
}

use std::ops::{DivAssign, MulAssign};
binop!(Add, add, AddAssign, add_assign);
binop!(Sub, sub, SubAssign, sub_assign);
binop!(Mul, mul, MulAssign, mul_assign);
binop!(Div, div, DivAssign, div_assign);

impl Neg for Num {
    type Output = Num;
    fn neg(self) -> Num {
        Num(-self.0)
    }
}

impl Sum for Num {
    fn sum<I: Iterator<Item = Num>>(iter: I) -> Num {
        iter.fold(Num::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Num> for Num {
    fn sum<I: Iterator<Item = &'a Num>>(iter: I) -> Num {
        iter.fold(Num::zero(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!("310000".parse::<Num>().unwrap(), Num::from(310000i64));
        assert_eq!("0.1".parse::<Num>().unwrap(), Num::ratio(1, 10));
        assert_eq!("-2.50".parse::<Num>().unwrap(), Num::ratio(-5, 2));
        assert_eq!("1e3".parse::<Num>().unwrap(), Num::from(1000i64));
        assert_eq!("2.5e-1".parse::<Num>().unwrap(), Num::ratio(1, 4));
        assert_eq!("6/4".parse::<Num>().unwrap(), Num::ratio(3, 2));
        assert_eq!(".5".parse::<Num>().unwrap(), Num::ratio(1, 2));
        assert!("abc".parse::<Num>().is_err());
        assert!("1/0".parse::<Num>().is_err());
        assert!("".parse::<Num>().is_err());
        assert!("1.2.3".parse::<Num>().is_err());
    }

    #[test]
    fn canonical_form() {
        let a = Num::ratio(2, -4);
        assert_eq!(a.numer(), &IBig::from(-1));
        assert_eq!(a.denom(), &UBig::from(2u8));
        assert_eq!(a.to_string(), "-0.5");
        assert_eq!(Num::ratio(4, 6).to_string(), "2/3");
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(Num::ratio(1, 8).to_decimal().as_deref(), Some("0.125"));
        assert_eq!(Num::ratio(-5, 2).to_decimal().as_deref(), Some("-2.5"));
        assert_eq!(Num::from(42i64).to_decimal().as_deref(), Some("42"));
        assert_eq!(Num::ratio(1, 3).to_decimal(), None);
    }

    proptest! {
        #[test]
        fn equality_is_cross_multiplication(a in -500i64..500, b in 1i64..500, c in -500i64..500, d in 1i64..500) {
            prop_assert_eq!(Num::ratio(a, b) == Num::ratio(c, d), a * d == c * b);
            prop_assert_eq!(Num::ratio(a, b) < Num::ratio(c, d), a * d < c * b);
        }

        #[test]
        fn string_round_trip(a in any::<i64>(), b in 1i64..i64::MAX) {
            let x = Num::ratio(a, b);
            prop_assert_eq!(x.to_string().parse::<Num>().unwrap(), x.clone());
            if let Some(dec) = x.to_decimal() {
                prop_assert_eq!(dec.parse::<Num>().unwrap(), x);
            }
        }
    }
}
