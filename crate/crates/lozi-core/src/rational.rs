//! Exact arbitrary-precision rational scalars.
//!
//! `Rational` is the substrate of every certificate in this crate: all
//! geometry, branch composition, and fixed-point solving is carried out
//! in it, with no rounding anywhere. It wraps `num_rational::BigRational`
//! and fixes the external text form to canonical `"num/den"` (lowest
//! terms, sign on the numerator, bare integers allowed).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

/// Shorthand constructor used pervasively in tests and built-in constants.
///
/// Panics on a zero denominator; use [`Rational::new`] for fallible
/// construction from untrusted input.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num, den).expect("division by zero")
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Self(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }

    pub fn from_int(n: i64) -> Self {
        Self(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Sign as an integer in {-1, 0, 1}.
    pub fn signum(&self) -> i32 {
        if self.0.is_positive() {
            1
        } else if self.0.is_negative() {
            -1
        } else {
            0
        }
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    /// Exact nonnegative integer power.
    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self(self.0.recip()))
    }

    /// Nearest `f64`. Only for display and for the explicitly
    /// non-rigorous diagnostics; certificates never round.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact rational value of a finite float.
    pub fn from_f64_exact(f: f64) -> Option<Self> {
        BigRational::from_float(f).map(Self)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        &self / &rhs
    }
}

impl Div<&Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        &self / rhs
    }
}

impl Div<Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        self / &rhs
    }
}

impl Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-(&self.0))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `"num/den"`, a bare integer, or a finite decimal such as
    /// `"-0.25"`. All three parse exactly.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Usage(format!("cannot parse rational from {s:?}"));
        if let Some((numer, denom)) = s.split_once('/') {
            let n: BigInt = numer.trim().parse().map_err(|_| bad())?;
            let d: BigInt = denom.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::DivisionByZero);
            }
            return Ok(Self(BigRational::new(n, d)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = int_part.starts_with('-');
            let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
            let n: BigInt = digits.parse().map_err(|_| bad())?;
            let d = BigInt::from(10u8).pow(frac_part.len() as u32);
            let r = BigRational::new(n, d);
            return Ok(Self(if negative { -r } else { r }));
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Self(BigRational::from_integer(n)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}
