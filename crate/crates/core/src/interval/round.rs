//! Directed rounding without touching the FPU control word.
//!
//! Every operation is performed in round-to-nearest and its exact error term
//! is recovered with an error-free transformation (TwoSum for addition, an
//! FMA residual for products, quotients and square roots). The result is
//! moved one ulp outward only when that error points outward, so exactly
//! representable results stay exact and inexact ones get the same endpoint
//! directed rounding would have produced.
//!
//! Where the residual itself could underflow the functions fall back to an
//! unconditional one-ulp nudge, which is always a valid (if one ulp looser)
//! bound for a correctly rounded operation.
//!
//! Overflow produces an infinite endpoint; [`super::Interval`] turns any
//! non-finite endpoint into the unbounded interval.

/// Below this magnitude an FMA residual may lose bits to underflow.
const TINY: f64 = 1.0e-290;
/// Above this magnitude a quotient residual may overflow.
const HUGE: f64 = 1.0e290;

#[inline(always)]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

#[inline(always)]
pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline(always)]
pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline(always)]
pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

#[inline(always)]
pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

#[inline(always)]
pub fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    let m = p.abs();
    if m >= TINY {
        if m == f64::INFINITY {
            return p;
        }
        if a.mul_add(b, -p) < 0.0 {
            p.next_down()
        } else {
            p
        }
    } else if a == 0.0 || b == 0.0 {
        0.0
    } else if (a > 0.0) == (b > 0.0) {
        p.next_down().max(0.0)
    } else {
        p.next_down()
    }
}

#[inline(always)]
pub fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    let m = p.abs();
    if m >= TINY {
        if m == f64::INFINITY {
            return p;
        }
        if a.mul_add(b, -p) > 0.0 {
            p.next_up()
        } else {
            p
        }
    } else if a == 0.0 || b == 0.0 {
        0.0
    } else if (a > 0.0) != (b > 0.0) {
        p.next_up().min(0.0)
    } else {
        p.next_up()
    }
}

/// Sign of `a/b - RN(a/b)`, or `None` when the residual is not reliable.
#[inline(always)]
fn div_err_sign(a: f64, b: f64, q: f64) -> Option<f64> {
    let m = q.abs();
    if (TINY..=HUGE).contains(&m) && a.abs() >= TINY && b.abs() <= HUGE {
        let r = (-q).mul_add(b, a);
        Some(if b > 0.0 { r } else { -r })
    } else {
        None
    }
}

#[inline(always)]
pub fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if a == 0.0 && b != 0.0 {
        return 0.0;
    }
    match div_err_sign(a, b, q) {
        Some(e) if e < 0.0 => q.next_down(),
        Some(_) => q,
        None if q.is_infinite() => q,
        None => q.next_down(),
    }
}

#[inline(always)]
pub fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if a == 0.0 && b != 0.0 {
        return 0.0;
    }
    match div_err_sign(a, b, q) {
        Some(e) if e > 0.0 => q.next_up(),
        Some(_) => q,
        None if q.is_infinite() => q,
        None => q.next_up(),
    }
}

/// Lower bound of `sqrt(a)` for `a >= 0`.
#[inline]
pub fn sqrt_down(a: f64) -> f64 {
    let s = a.sqrt();
    if a == 0.0 || a.is_infinite() {
        return s;
    }
    if a >= TINY {
        if (-s).mul_add(s, a) < 0.0 {
            s.next_down()
        } else {
            s
        }
    } else {
        s.next_down().max(0.0)
    }
}

/// Upper bound of `sqrt(a)` for `a >= 0`.
#[inline]
pub fn sqrt_up(a: f64) -> f64 {
    let s = a.sqrt();
    if a == 0.0 || a.is_infinite() {
        return s;
    }
    if a >= TINY {
        if (-s).mul_add(s, a) > 0.0 {
            s.next_up()
        } else {
            s
        }
    } else {
        s.next_up()
    }
}

/// Upper bound of `a^n` for `a >= 0`.
pub fn pow_up_nonneg(a: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    let mut base = a;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_up(acc, base);
        }
        e >>= 1;
        if e > 0 {
            base = mul_up(base, base);
        }
    }
    acc
}

/// Lower bound of `a^n` for `a >= 0`.
pub fn pow_down_nonneg(a: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    let mut base = a;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_down(acc, base);
        }
        e >>= 1;
        if e > 0 {
            base = mul_down(base, base);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_operations_are_not_widened() {
        assert_eq!(add_down(1.0, 2.0), 3.0);
        assert_eq!(add_up(1.0, 2.0), 3.0);
        assert_eq!(mul_down(3.0, 0.5), 1.5);
        assert_eq!(div_up(1.0, 2.0), 0.5);
        assert_eq!(sqrt_down(9.0), 3.0);
        assert_eq!(sqrt_up(9.0), 3.0);
    }

    #[test]
    fn inexact_operations_bracket() {
        let lo = add_down(0.1, 0.2);
        let hi = add_up(0.1, 0.2);
        assert!(lo < hi);
        assert_eq!(hi, lo.next_up());
        let lo = div_down(1.0, 3.0);
        let hi = div_up(1.0, 3.0);
        assert_eq!(hi, lo.next_up());
        assert!(3.0 * lo <= 1.0 && 3.0 * hi >= 1.0);
    }

    #[test]
    fn negative_divisor_direction() {
        let lo = div_down(1.0, -3.0);
        let hi = div_up(1.0, -3.0);
        assert_eq!(hi, lo.next_up());
        assert!(lo < -1.0 / 3.0 || hi > -1.0 / 3.0);
    }

    #[test]
    fn underflow_falls_back_to_nudging() {
        let a = 1e-200;
        let lo = mul_down(a, a);
        let hi = mul_up(a, a);
        assert!(lo <= hi && lo >= 0.0 && hi > 0.0);
    }

    #[test]
    fn powers_bracket() {
        assert_eq!(pow_down_nonneg(1.5, 7), 17.0859375);
        assert_eq!(pow_up_nonneg(1.5, 7), 17.0859375);
        let lo = pow_down_nonneg(1.1, 7);
        let hi = pow_up_nonneg(1.1, 7);
        assert!(lo < hi && hi - lo < 1e-14);
    }
}
