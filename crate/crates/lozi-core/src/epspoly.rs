//! Truncated one-variable polynomials in a small parameter eps, used to
//! push box vertices with eps-dependent coordinates through the map while
//! keeping constant and linear coefficients exact.
//!
//! A polynomial stores coefficients up to a fixed degree cap (default 2)
//! plus a `truncated` flag recording that unknown higher-order terms were
//! dropped. All stored coefficients stay exact; the flag only widens what
//! the value is allowed to mean beyond the cap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Default degree cap: constant, linear, and quadratic terms.
pub const DEFAULT_EPS_CAP: usize = 2;

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct EpsPoly {
    /// Coefficients by ascending degree; length is cap + 1.
    pub coeffs: Vec<Rational>,
    /// True when a nonzero term beyond the cap was discarded, or the
    /// value inherited such a loss from an operand.
    pub truncated: bool,
}

impl EpsPoly {
    pub fn zero(cap: usize) -> Self {
        Self {
            coeffs: vec![Rational::zero(); cap + 1],
            truncated: false,
        }
    }

    pub fn constant(c: Rational, cap: usize) -> Self {
        let mut p = Self::zero(cap);
        p.coeffs[0] = c;
        p
    }

    /// The monomial eps. Requires cap >= 1.
    pub fn eps(cap: usize) -> Self {
        assert!(cap >= 1, "degree cap must admit a linear term");
        let mut p = Self::zero(cap);
        p.coeffs[1] = Rational::one();
        p
    }

    pub fn from_coeffs(coeffs: Vec<Rational>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "at least the constant coefficient is required"
        );
        Self {
            coeffs,
            truncated: false,
        }
    }

    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        !self.truncated && self.coeffs.iter().all(Rational::is_zero)
    }

    pub fn constant_term(&self) -> &Rational {
        &self.coeffs[0]
    }

    pub fn linear_term(&self) -> Rational {
        self.coeffs.get(1).cloned().unwrap_or_else(Rational::zero)
    }

    fn check_cap(&self, other: &EpsPoly) {
        assert_eq!(
            self.cap(),
            other.cap(),
            "operands must share the degree cap"
        );
    }

    pub fn add(&self, other: &EpsPoly) -> EpsPoly {
        self.check_cap(other);
        EpsPoly {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            truncated: self.truncated || other.truncated,
        }
    }

    pub fn sub(&self, other: &EpsPoly) -> EpsPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> EpsPoly {
        EpsPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            truncated: self.truncated,
        }
    }

    pub fn scale(&self, t: &Rational) -> EpsPoly {
        EpsPoly {
            coeffs: self.coeffs.iter().map(|c| t * c).collect(),
            // Scaling by zero annihilates the unknown tail too.
            truncated: self.truncated && !t.is_zero(),
        }
    }

    pub fn mul(&self, other: &EpsPoly) -> EpsPoly {
        self.check_cap(other);
        let cap = self.cap();
        let mut coeffs = vec![Rational::zero(); cap + 1];
        let mut dropped_nonzero = false;
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                if i + j <= cap {
                    coeffs[i + j] = &coeffs[i + j] + a * b;
                } else {
                    dropped_nonzero = true;
                }
            }
        }
        let tail_from_self = self.truncated && !other.is_zero();
        let tail_from_other = other.truncated && !self.is_zero();
        EpsPoly {
            coeffs,
            truncated: dropped_nonzero || tail_from_self || tail_from_other,
        }
    }

    /// Exact evaluation at a concrete eps. Only meaningful when the
    /// polynomial is not truncated; the constant term (eps = 0) is exact
    /// regardless because the dropped tail vanishes there.
    pub fn eval(&self, eps: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * eps + c;
        }
        acc
    }

    /// Sign of the value for all small enough eps > 0: the sign of the
    /// lowest-degree nonzero coefficient. Identically zero gives 0;
    /// all-zero stored coefficients with a truncated tail are
    /// indeterminate.
    pub fn sign_at_zero_plus(&self) -> Result<i32> {
        for c in &self.coeffs {
            let s = c.signum();
            if s != 0 {
                return Ok(s);
            }
        }
        if self.truncated {
            Err(Error::IndeterminateSign { step: None })
        } else {
            Ok(0)
        }
    }
}

/// Outcome of resolving an absolute value in eps-arithmetic.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct AbsResolution {
    pub value: EpsPoly,
    /// Sign taken for small eps > 0: +1, -1, or 0 for identically zero.
    pub sign: i32,
    /// Index of the lowest nonzero coefficient that witnessed the strict
    /// sign; `None` for the identically-zero case.
    pub witness: Option<usize>,
}

/// `|p|` for all small enough eps > 0, with the sign witness recorded.
pub fn eps_abs(p: &EpsPoly) -> Result<AbsResolution> {
    let sign = p.sign_at_zero_plus()?;
    let witness = p.coeffs.iter().position(|c| !c.is_zero());
    let value = if sign < 0 { p.neg() } else { p.clone() };
    Ok(AbsResolution {
        value,
        sign,
        witness,
    })
}

/// A point whose coordinates are eps-polynomials.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct EpsPoint {
    pub x: EpsPoly,
    pub y: EpsPoly,
}

impl EpsPoint {
    pub fn new(x: EpsPoly, y: EpsPoly) -> Self {
        assert_eq!(x.cap(), y.cap(), "coordinates must share the degree cap");
        Self { x, y }
    }

    pub fn constant(x: Rational, y: Rational, cap: usize) -> Self {
        Self {
            x: EpsPoly::constant(x, cap),
            y: EpsPoly::constant(y, cap),
        }
    }

    /// Exact value at eps = 0.
    pub fn at_zero(&self) -> (Rational, Rational) {
        (
            self.x.constant_term().clone(),
            self.y.constant_term().clone(),
        )
    }
}

/// One map step `(x, y) -> (1 - a|x| + b y, x)` in truncated
/// eps-arithmetic, returning the image and the absolute-value resolution
/// taken for `|x|`.
pub fn lozi_step_eps(a: &EpsPoly, b: &EpsPoly, p: &EpsPoint) -> Result<(EpsPoint, AbsResolution)> {
    let cap = p.x.cap();
    let abs = eps_abs(&p.x)?;
    let one = EpsPoly::constant(Rational::one(), cap);
    let x_next = one.sub(&a.mul(&abs.value)).add(&b.mul(&p.y));
    Ok((EpsPoint::new(x_next, p.x.clone()), abs))
}

/// One map step in truncated eps-arithmetic; the absolute value is
/// resolved by [`eps_abs`].
pub fn lozi_apply_eps(a: &EpsPoly, b: &EpsPoly, p: &EpsPoint) -> Result<EpsPoint> {
    lozi_step_eps(a, b, p).map(|(q, _)| q)
}
