//! Outward-rounded interval arithmetic on `f64` endpoints.
//!
//! All rounding decisions live in [`round`]; nothing outside this module
//! needs to know how the endpoints are rounded.
//!
//! The operator impls (`+`, `*`, ...) never fail: an overflowing endpoint
//! turns the result into the unbounded interval, which absorbs every later
//! operation and is reported by [`Interval::is_bounded`]. Callers that need
//! the error at the point of overflow use the `checked_*` methods.

pub mod hexfloat;
pub mod linalg;
pub mod round;

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use linalg::{mat_inverse, IntervalMatrix, IntervalVector, MatInverse};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntervalError {
    #[error("invalid interval endpoints [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("interval result is unbounded")]
    Overflow,
    #[error("division by an interval containing zero")]
    DivisionByZeroInterval,
    #[error("argument outside the domain of {0}")]
    DomainError(&'static str),
    #[error("interval matrix is singular (determinant encloses zero)")]
    SingularIntervalMatrix,
}

/// A closed interval `[lo, hi]` with machine-number endpoints.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// Validated constructor: requires finite endpoints with `lo <= hi`.
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(IntervalError::InvalidBounds { lo, hi })
        }
    }

    /// Degenerate interval `[x, x]`. Panics on a non-finite argument.
    pub fn point(x: f64) -> Self {
        assert!(x.is_finite(), "Interval::point({x})");
        Interval { lo: x, hi: x }
    }

    /// Smallest interval containing both numbers.
    pub fn hull_of(a: f64, b: f64) -> Self {
        Self::raw(a.min(b), a.max(b))
    }

    /// Internal constructor used by the arithmetic: any non-finite or NaN
    /// endpoint collapses to [`Interval::ENTIRE`].
    #[inline(always)]
    fn raw(lo: f64, hi: f64) -> Self {
        if lo.is_finite() && hi.is_finite() {
            Interval { lo, hi }
        } else {
            Interval::ENTIRE
        }
    }

    /// Symmetric interval `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        let r = r.abs();
        Self::raw(-r, r)
    }

    #[inline(always)]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline(always)]
    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn is_bounded(self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    /// Midpoint, guaranteed to lie in the interval.
    #[inline]
    pub fn mid(self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (false, false) => return 0.0,
            (false, true) => return f64::MIN,
            (true, false) => return f64::MAX,
            _ => {}
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on the width.
    #[inline]
    pub fn diam(self) -> f64 {
        round::sub_up(self.hi, self.lo)
    }

    /// Upper bound on the radius around [`Interval::mid`].
    pub fn rad(self) -> f64 {
        let m = self.mid();
        round::sub_up(m, self.lo).max(round::sub_up(self.hi, m))
    }

    /// Largest absolute value.
    #[inline]
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value.
    pub fn mig(self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    #[inline]
    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn contains_zero(self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    /// `self ⊆ other`.
    pub fn subset(self, other: Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// `self ⊂ int(other)`: both endpoints strictly inside.
    pub fn subset_interior(self, other: Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    /// Set intersection; `None` is the empty set.
    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn intersects(self, other: Interval) -> bool {
        self.intersect(other).is_some()
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Strictly below `other` everywhere.
    pub fn certainly_lt(self, other: Interval) -> bool {
        self.hi < other.lo
    }

    /// Splits into `n` contiguous pieces; consecutive pieces share an
    /// endpoint and the first/last endpoints are exactly `lo`/`hi`.
    pub fn split(self, n: usize) -> Vec<Interval> {
        assert!(n >= 1, "split into zero pieces");
        let mut cuts = Vec::with_capacity(n + 1);
        cuts.push(self.lo);
        let width = self.hi - self.lo;
        for i in 1..n {
            let t = i as f64 / n as f64;
            let c = (self.lo + width * t).clamp(self.lo, self.hi);
            let prev = *cuts.last().unwrap();
            cuts.push(c.max(prev));
        }
        cuts.push(self.hi);
        cuts.windows(2)
            .map(|w| Interval { lo: w[0], hi: w[1] })
            .collect()
    }

    /// `self` scaled around its midpoint by `factor` (outward-rounded).
    pub fn inflate(self, factor: f64, abs: f64) -> Interval {
        let m = self.mid();
        let r = round::add_up(round::mul_up(self.rad(), factor), abs);
        Interval::raw(round::sub_down(m, r), round::add_up(m, r))
    }

    /// Tight square: `[−1, 2]² = [0, 4]`.
    pub fn sqr(self) -> Interval {
        if self.lo >= 0.0 {
            Interval::raw(round::mul_down(self.lo, self.lo), round::mul_up(self.hi, self.hi))
        } else if self.hi <= 0.0 {
            Interval::raw(round::mul_down(self.hi, self.hi), round::mul_up(self.lo, self.lo))
        } else {
            let m = self.mag();
            Interval::raw(0.0, round::mul_up(m, m))
        }
    }

    /// Tight integer power.
    pub fn powi(self, n: u32) -> Interval {
        use round::{pow_down_nonneg as pd, pow_up_nonneg as pu};
        if n == 0 {
            return Interval::ONE;
        }
        if n % 2 == 1 {
            let lo = if self.lo >= 0.0 {
                pd(self.lo, n)
            } else {
                -pu(-self.lo, n)
            };
            let hi = if self.hi >= 0.0 {
                pu(self.hi, n)
            } else {
                -pd(-self.hi, n)
            };
            Interval::raw(lo, hi)
        } else if self.lo >= 0.0 {
            Interval::raw(pd(self.lo, n), pu(self.hi, n))
        } else if self.hi <= 0.0 {
            Interval::raw(pd(-self.hi, n), pu(-self.lo, n))
        } else {
            Interval::raw(0.0, pu(self.mag(), n))
        }
    }

    pub fn sqrt(self) -> Result<Interval, IntervalError> {
        if self.lo < 0.0 {
            return Err(IntervalError::DomainError("sqrt"));
        }
        Ok(Interval::raw(round::sqrt_down(self.lo), round::sqrt_up(self.hi)))
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByZeroInterval);
        }
        let r = self / rhs;
        r.bounded()
    }

    pub fn checked_add(self, rhs: Interval) -> Result<Interval, IntervalError> {
        (self + rhs).bounded()
    }

    pub fn checked_sub(self, rhs: Interval) -> Result<Interval, IntervalError> {
        (self - rhs).bounded()
    }

    pub fn checked_mul(self, rhs: Interval) -> Result<Interval, IntervalError> {
        (self * rhs).bounded()
    }

    /// `Ok(self)` if both endpoints are finite.
    pub fn bounded(self) -> Result<Interval, IntervalError> {
        if self.is_bounded() {
            Ok(self)
        } else {
            Err(IntervalError::Overflow)
        }
    }

    /// `1 / self`.
    pub fn recip(self) -> Result<Interval, IntervalError> {
        Interval::ONE.checked_div(self)
    }

    /// Multiplication by a machine number.
    #[inline]
    pub fn scale(self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval::raw(round::mul_down(self.lo, c), round::mul_up(self.hi, c))
        } else {
            Interval::raw(round::mul_down(self.hi, c), round::mul_up(self.lo, c))
        }
    }

    /// Division by a nonzero machine number.
    #[inline]
    pub fn div_scalar(self, c: f64) -> Interval {
        debug_assert!(c != 0.0);
        if c > 0.0 {
            Interval::raw(round::div_down(self.lo, c), round::div_up(self.hi, c))
        } else {
            Interval::raw(round::div_down(self.hi, c), round::div_up(self.lo, c))
        }
    }

    /// Lower endpoint is strictly positive.
    pub fn is_positive(self) -> bool {
        self.lo > 0.0
    }

    /// Upper endpoint is strictly negative.
    pub fn is_negative(self) -> bool {
        self.hi < 0.0
    }
}

/// Tightest machine enclosure of `2^(-1/2)`.
pub fn inv_sqrt2() -> Interval {
    let s = 0.5_f64.sqrt();
    if (-s).mul_add(s, 0.5) > 0.0 {
        Interval { lo: s, hi: s.next_up() }
    } else {
        Interval { lo: s.next_down(), hi: s }
    }
}

/// Tightest machine enclosure of `sqrt(2)`.
pub fn sqrt2() -> Interval {
    Interval::point(2.0).sqrt().expect("sqrt(2)")
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hexfloat::decimal_enclosure(*self))
    }
}

impl Neg for Interval {
    type Output = Interval;
    #[inline(always)]
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    #[inline(always)]
    fn add(self, rhs: Interval) -> Interval {
        Interval::raw(round::add_down(self.lo, rhs.lo), round::add_up(self.hi, rhs.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline(always)]
    fn sub(self, rhs: Interval) -> Interval {
        Interval::raw(round::sub_down(self.lo, rhs.hi), round::sub_up(self.hi, rhs.lo))
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, rhs: Interval) -> Interval {
        use round::{mul_down as md, mul_up as mu};
        if !self.is_bounded() || !rhs.is_bounded() {
            return Interval::ENTIRE;
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let (lo, hi) = if a >= 0.0 {
            if c >= 0.0 {
                (md(a, c), mu(b, d))
            } else if d <= 0.0 {
                (md(b, c), mu(a, d))
            } else {
                (md(b, c), mu(b, d))
            }
        } else if b <= 0.0 {
            if c >= 0.0 {
                (md(a, d), mu(b, c))
            } else if d <= 0.0 {
                (md(b, d), mu(a, c))
            } else {
                (md(a, d), mu(a, c))
            }
        } else if c >= 0.0 {
            (md(a, d), mu(b, d))
        } else if d <= 0.0 {
            (md(b, c), mu(a, c))
        } else {
            (md(a, d).min(md(b, c)), mu(a, c).max(mu(b, d)))
        };
        if lo.is_nan() || hi.is_nan() {
            // 0 · ∞ from an already unbounded operand
            return Interval::ENTIRE;
        }
        Interval::raw(lo, hi)
    }
}

impl Div for Interval {
    type Output = Interval;
    /// Quotient; a divisor containing zero yields [`Interval::ENTIRE`].
    fn div(self, rhs: Interval) -> Interval {
        use round::{div_down as dd, div_up as du};
        if rhs.contains_zero() || !self.is_bounded() || !rhs.is_bounded() {
            return Interval::ENTIRE;
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let (lo, hi) = if c > 0.0 {
            if a >= 0.0 {
                (dd(a, d), du(b, c))
            } else if b <= 0.0 {
                (dd(a, c), du(b, d))
            } else {
                (dd(a, c), du(b, c))
            }
        } else if a >= 0.0 {
            (dd(b, d), du(a, c))
        } else if b <= 0.0 {
            (dd(b, c), du(a, d))
        } else {
            (dd(b, d), du(a, d))
        };
        if lo.is_nan() || hi.is_nan() {
            return Interval::ENTIRE;
        }
        Interval::raw(lo, hi)
    }
}

impl AddAssign for Interval {
    #[inline(always)]
    fn add_assign(&mut self, rhs: Interval) {
        *self = *self + rhs;
    }
}

impl SubAssign for Interval {
    #[inline(always)]
    fn sub_assign(&mut self, rhs: Interval) {
        *self = *self - rhs;
    }
}

impl MulAssign for Interval {
    #[inline(always)]
    fn mul_assign(&mut self, rhs: Interval) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Interval {
        iter.fold(Interval::ZERO, |a, b| a + b)
    }
}

/// Certificates store intervals as bit-exact hexadecimal endpoints plus an
/// informational decimal enclosure.
#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    lo: String,
    hi: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dec: Option<String>,
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        IntervalRepr {
            lo: hexfloat::format_hex(self.lo),
            hi: hexfloat::format_hex(self.hi),
            dec: Some(hexfloat::decimal_enclosure(*self)),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = IntervalRepr::deserialize(d)?;
        hexfloat::parse_interval_parts(&r.lo, &r.hi).map_err(D::Error::custom)
    }
}
