//! Power-series recurrence for the extended system and the jet types used to
//! differentiate Taylor coefficients with respect to the initial point.
//!
//! The only nonlinearity is `x³`, handled by two Cauchy products. The
//! recurrence is generic over [`Coeff`], so the same code produces
//! coefficients (`Interval`), coefficients with their gradient (`Jet1`) and
//! with gradient and Hessian (`Jet2`), all with respect to the five extended
//! coordinates `(x, y, z, w, ξ)`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::interval::Interval;

pub const DIM: usize = 5;
/// Number of distinct second partials in five variables.
pub const SYM: usize = DIM * (DIM + 1) / 2;

/// Position of `∂_j ∂_k` (either order) in a packed symmetric array.
#[inline(always)]
pub const fn sym_index(j: usize, k: usize) -> usize {
    let (a, b) = if j <= k { (j, k) } else { (k, j) };
    a * DIM - a * (a + 1) / 2 + b
}

pub trait Coeff:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    /// Division by a positive integer, outward rounded.
    fn div_int(self, k: u32) -> Self;
    fn twice(self) -> Self;
}

impl Coeff for Interval {
    #[inline(always)]
    fn zero() -> Self {
        Interval::ZERO
    }
    #[inline(always)]
    fn div_int(self, k: u32) -> Self {
        if k == 1 {
            self
        } else {
            self.div_scalar(k as f64)
        }
    }
    #[inline(always)]
    fn twice(self) -> Self {
        self.scale(2.0)
    }
}

/// Which right-hand side the recurrence expands.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Field {
    #[default]
    SwiftHohenberg,
    /// The same system with the cubic term removed; a test hook whose flow
    /// is linear in `(x, y, z, w)`.
    Linear,
}

/// Taylor coefficients `c_0, …, c_order` of the solution of the extended
/// system with `c_0 = init`.
pub fn coefficients<C: Coeff>(init: &[C; DIM], order: usize) -> Vec<[C; DIM]> {
    coefficients_of(Field::SwiftHohenberg, init, order)
}

pub fn coefficients_of<C: Coeff>(field: Field, init: &[C; DIM], order: usize) -> Vec<[C; DIM]> {
    let mut c: Vec<[C; DIM]> = Vec::with_capacity(order + 1);
    c.push(*init);
    let xi = init[4];
    let mut sq: Vec<C> = Vec::with_capacity(order + 1);
    for k in 0..order {
        // (x²)_k, using the symmetry of the Cauchy product
        let mut s = C::zero();
        for i in 0..(k + 1) / 2 {
            s = s + c[i][0] * c[k - i][0];
        }
        s = s.twice();
        if k % 2 == 0 {
            let m = c[k / 2][0];
            s = s + m * m;
        }
        sq.push(s);
        let mut cube = C::zero();
        if field == Field::SwiftHohenberg {
            for i in 0..=k {
                cube = cube + sq[i] * c[k - i][0];
            }
        }
        let ck = c[k];
        let d = (k + 1) as u32;
        c.push([
            ck[1].div_int(d),
            ck[2].div_int(d),
            ck[3].div_int(d),
            (ck[0] - xi * ck[2] - cube).div_int(d),
            C::zero(),
        ]);
    }
    c
}

/// Value and gradient with respect to the five extended coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1 {
    pub v: Interval,
    pub d: [Interval; DIM],
}

/// Value, gradient and packed Hessian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: Interval,
    pub d: [Interval; DIM],
    pub h: [Interval; SYM],
}

impl Jet1 {
    pub fn constant(v: Interval) -> Self {
        Jet1 { v, d: [Interval::ZERO; DIM] }
    }

    /// The coordinate function `e_i` evaluated on `v`.
    pub fn variable(v: Interval, i: usize) -> Self {
        let mut j = Self::constant(v);
        j.d[i] = Interval::ONE;
        j
    }

    pub fn seed(x: &[Interval; DIM]) -> [Jet1; DIM] {
        std::array::from_fn(|i| Jet1::variable(x[i], i))
    }
}

impl Jet2 {
    pub fn constant(v: Interval) -> Self {
        Jet2 { v, d: [Interval::ZERO; DIM], h: [Interval::ZERO; SYM] }
    }

    pub fn variable(v: Interval, i: usize) -> Self {
        let mut j = Self::constant(v);
        j.d[i] = Interval::ONE;
        j
    }

    pub fn seed(x: &[Interval; DIM]) -> [Jet2; DIM] {
        std::array::from_fn(|i| Jet2::variable(x[i], i))
    }

    #[inline(always)]
    pub fn hess(&self, j: usize, k: usize) -> Interval {
        self.h[sym_index(j, k)]
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    #[inline(always)]
    fn add(self, r: Jet1) -> Jet1 {
        Jet1 { v: self.v + r.v, d: std::array::from_fn(|i| self.d[i] + r.d[i]) }
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    #[inline(always)]
    fn sub(self, r: Jet1) -> Jet1 {
        Jet1 { v: self.v - r.v, d: std::array::from_fn(|i| self.d[i] - r.d[i]) }
    }
}

impl Neg for Jet1 {
    type Output = Jet1;
    #[inline(always)]
    fn neg(self) -> Jet1 {
        Jet1 { v: -self.v, d: self.d.map(|x| -x) }
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    #[inline(always)]
    fn mul(self, r: Jet1) -> Jet1 {
        Jet1 {
            v: self.v * r.v,
            d: std::array::from_fn(|i| self.v * r.d[i] + self.d[i] * r.v),
        }
    }
}

impl Coeff for Jet1 {
    fn zero() -> Self {
        Jet1::constant(Interval::ZERO)
    }
    #[inline(always)]
    fn div_int(self, k: u32) -> Self {
        Jet1 { v: self.v.div_int(k), d: self.d.map(|x| x.div_int(k)) }
    }
    #[inline(always)]
    fn twice(self) -> Self {
        Jet1 { v: self.v.twice(), d: self.d.map(Interval::twice) }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline(always)]
    fn add(self, r: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + r.v,
            d: std::array::from_fn(|i| self.d[i] + r.d[i]),
            h: std::array::from_fn(|i| self.h[i] + r.h[i]),
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline(always)]
    fn sub(self, r: Jet2) -> Jet2 {
        Jet2 {
            v: self.v - r.v,
            d: std::array::from_fn(|i| self.d[i] - r.d[i]),
            h: std::array::from_fn(|i| self.h[i] - r.h[i]),
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    #[inline(always)]
    fn neg(self) -> Jet2 {
        Jet2 { v: -self.v, d: self.d.map(|x| -x), h: self.h.map(|x| -x) }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, r: Jet2) -> Jet2 {
        let mut h = [Interval::ZERO; SYM];
        let mut idx = 0;
        for j in 0..DIM {
            for k in j..DIM {
                h[idx] = self.v * r.h[idx]
                    + self.h[idx] * r.v
                    + self.d[j] * r.d[k]
                    + self.d[k] * r.d[j];
                idx += 1;
            }
        }
        Jet2 {
            v: self.v * r.v,
            d: std::array::from_fn(|i| self.v * r.d[i] + self.d[i] * r.v),
            h,
        }
    }
}

impl Coeff for Jet2 {
    fn zero() -> Self {
        Jet2::constant(Interval::ZERO)
    }
    #[inline(always)]
    fn div_int(self, k: u32) -> Self {
        Jet2 {
            v: self.v.div_int(k),
            d: self.d.map(|x| x.div_int(k)),
            h: self.h.map(|x| x.div_int(k)),
        }
    }
    #[inline(always)]
    fn twice(self) -> Self {
        Jet2 { v: self.v.twice(), d: self.d.map(Interval::twice), h: self.h.map(Interval::twice) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(p: [f64; DIM]) -> [Interval; DIM] {
        p.map(Interval::point)
    }

    #[test]
    fn packed_index_is_a_bijection() {
        let mut seen = [false; SYM];
        for j in 0..DIM {
            for k in j..DIM {
                let i = sym_index(j, k);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(sym_index(k, j), i);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn jets_agree_with_plain_coefficients() {
        let x = pts([-1.3, 0.2, 0.8, -0.1, 2.0]);
        let plain = coefficients(&x, 10);
        let j1 = coefficients(&Jet1::seed(&x), 10);
        let j2 = coefficients(&Jet2::seed(&x), 10);
        for k in 0..=10 {
            for i in 0..DIM {
                assert!(plain[k][i].intersects(j1[k][i].v));
                assert!(plain[k][i].intersects(j2[k][i].v));
                for a in 0..DIM {
                    assert!(j1[k][i].d[a].intersects(j2[k][i].d[a]));
                }
            }
        }
    }

    /// `d c_k / d x_a` against central differences of the plain recurrence.
    #[test]
    fn gradient_matches_finite_differences() {
        let base = [-1.3, 0.2, 0.8, -0.1, 2.0];
        let order = 8;
        let j2 = coefficients(&Jet2::seed(&pts(base)), order);
        let eps = 1e-6;
        for a in 0..DIM {
            let mut p = base;
            let mut m = base;
            p[a] += eps;
            m[a] -= eps;
            let cp = coefficients(&pts(p), order);
            let cm = coefficients(&pts(m), order);
            for k in 0..=order {
                for i in 0..DIM {
                    let fd = (cp[k][i].mid() - cm[k][i].mid()) / (2.0 * eps);
                    let an = j2[k][i].d[a].mid();
                    assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "k={k} i={i} a={a}");
                    // second derivatives from differences of gradients
                    let jp = coefficients(&Jet1::seed(&pts(p)), order);
                    let jm = coefficients(&Jet1::seed(&pts(m)), order);
                    for b in 0..DIM {
                        let fd2 = (jp[k][i].d[b].mid() - jm[k][i].d[b].mid()) / (2.0 * eps);
                        let an2 = j2[k][i].hess(a, b).mid();
                        assert!((fd2 - an2).abs() <= 1e-5 * (1.0 + an2.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn parameter_is_constant_in_time() {
        let c = coefficients(&pts([0.3, 0.1, -0.2, 0.5, 1.4]), 6);
        assert!(c[1..].iter().all(|ck| ck[4] == Interval::ZERO));
    }
}
