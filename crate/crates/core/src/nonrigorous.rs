//! Non-rigorous reference integration, independent of the Taylor/interval
//! code path: Gragg–Bulirsch–Stoer extrapolation of the modified midpoint
//! rule, generic over `f64` and a small double-double type.
//!
//! Used for seeds (shooting plus Newton) and as the oracle in tests.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self {
        if self < Self::from_f64(0.0) {
            -self
        } else {
            self
        }
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2` (about 32 digits).
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> DD {
    let s = a + b;
    DD { hi: s, lo: b - (s - a) }
}

impl DD {
    pub fn new(v: f64) -> Self {
        DD { hi: v, lo: 0.0 }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, r: DD) -> DD {
        let (s, e) = two_sum(self.hi, r.hi);
        let (t, f) = two_sum(self.lo, r.lo);
        let e = e + t;
        let v = quick_two_sum(s, e);
        quick_two_sum(v.hi, v.lo + f)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, r: DD) -> DD {
        self + (-r)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, r: DD) -> DD {
        let p = self.hi * r.hi;
        let e = self.hi.mul_add(r.hi, -p);
        let e = e + (self.hi * r.lo + self.lo * r.hi);
        quick_two_sum(p, e)
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, r: DD) -> DD {
        let q1 = self.hi / r.hi;
        let rem = self - r * DD::new(q1);
        let q2 = rem.hi / r.hi;
        let rem = rem - r * DD::new(q2);
        let q3 = rem.hi / r.hi;
        let q = quick_two_sum(q1, q2);
        q + DD::new(q3)
    }
}

impl Real for DD {
    fn from_f64(v: f64) -> Self {
        DD::new(v)
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

pub type State<R> = [R; 5];

fn c<R: Real>(v: f64) -> R {
    R::from_f64(v)
}

/// Extended field, optionally with the cubic term removed (test hook for
/// the linear system).
pub fn field<R: Real>(u: &State<R>, cubic: bool) -> State<R> {
    let [x, y, z, w, xi] = *u;
    let mut wd = x - xi * z;
    if cubic {
        wd = wd - x * x * x;
    }
    [y, z, w, wd, c(0.0)]
}

pub fn energy<R: Real>(u: &State<R>) -> R {
    let [x, y, z, w, xi] = *u;
    let q = x * x - c(1.0);
    w * y - c::<R>(0.5) * z * z + c::<R>(0.5) * xi * y * y + c::<R>(0.25) * q * q
}

fn axpy<R: Real>(a: R, x: &State<R>, y: &State<R>) -> State<R> {
    std::array::from_fn(|i| y[i] + a * x[i])
}

/// Integration settings: macro step and extrapolation depth.
#[derive(Clone, Copy, Debug)]
pub struct Gbs {
    pub macro_step: f64,
    pub levels: usize,
    pub cubic: bool,
}

impl Gbs {
    pub fn f64_default() -> Self {
        Gbs { macro_step: 0.05, levels: 8, cubic: true }
    }

    pub fn dd_default() -> Self {
        Gbs { macro_step: 0.04, levels: 11, cubic: true }
    }

    fn midpoint<R: Real>(&self, y: &State<R>, h: R, n: usize) -> State<R> {
        let hs = h / c(n as f64);
        let mut z0 = *y;
        let mut z1 = axpy(hs, &field(&z0, self.cubic), &z0);
        for _ in 1..n {
            let z2 = axpy(hs + hs, &field(&z1, self.cubic), &z0);
            z0 = z1;
            z1 = z2;
        }
        let end = axpy(hs, &field(&z1, self.cubic), &z0);
        std::array::from_fn(|i| c::<R>(0.5) * (z1[i] + end[i]))
    }

    /// One extrapolated step of length `h` (any sign), Neville tableau in `h²`.
    pub fn step<R: Real>(&self, y: &State<R>, h: R) -> State<R> {
        let ns: Vec<usize> = (1..=self.levels).map(|j| 2 * j).collect();
        let mut prev: Vec<State<R>> = Vec::new();
        for (j, &n) in ns.iter().enumerate() {
            let mut row = Vec::with_capacity(j + 1);
            row.push(self.midpoint(y, h, n));
            for k in 1..=j {
                let ratio = c::<R>(n as f64) / c(ns[j - k] as f64);
                let denom = ratio * ratio - c(1.0);
                let a = row[k - 1];
                let b = prev[k - 1];
                row.push(std::array::from_fn(|i| a[i] + (a[i] - b[i]) / denom));
            }
            prev = row;
        }
        *prev.last().unwrap()
    }

    /// Flow for time `t` (any sign).
    pub fn flow<R: Real>(&self, y: &State<R>, t: f64) -> State<R> {
        let n = (t.abs() / self.macro_step).ceil().max(1.0) as usize;
        let h = c::<R>(t) / c(n as f64);
        let mut u = *y;
        for _ in 0..n {
            u = self.step(&u, h);
        }
        u
    }
}

/// One section crossing found by the reference integrator.
#[derive(Clone, Copy, Debug)]
pub struct Crossing<R> {
    pub time: f64,
    pub state: State<R>,
}

/// First `n` zeros of `y(t)` for `t > 0`, each located by Newton's method
/// on `t ↦ y(t)` using `y' = z`.
pub fn crossings<R: Real>(start: &State<R>, n: usize, gbs: &Gbs, t_max: f64) -> Option<Vec<Crossing<R>>> {
    let mut out = Vec::with_capacity(n);
    let mut u = *start;
    let mut t = 0.0;
    let h = gbs.macro_step;
    let zero = c::<R>(0.0);
    while out.len() < n && t < t_max {
        let next = gbs.step(&u, c(h));
        let y0 = u[1];
        let y1 = next[1];
        if y0 != zero && (y1 == zero || (y0 < zero) != (y1 < zero)) {
            let mut s = c::<R>(h * (y0.to_f64() / (y0.to_f64() - y1.to_f64())));
            for _ in 0..60 {
                let cross = gbs.step(&u, s);
                let ds = cross[1] / cross[2];
                s = s - ds;
                if ds.to_f64().abs() <= 1e-30 {
                    break;
                }
            }
            let mut cross = gbs.step(&u, s);
            cross[1] = zero;
            out.push(Crossing { time: t + s.to_f64(), state: cross });
        }
        u = next;
        t += h;
        let big = u.iter().any(|v| v.to_f64().abs() > 1e6 || !v.to_f64().is_finite());
        if big {
            return None;
        }
    }
    (out.len() == n).then_some(out)
}

/// `(x, 0, (x² − 1)/√2, 0, ξ)` in the working precision.
pub fn embed<R: Real>(xi: R, x: R) -> State<R> {
    [x, c(0.0), (x * x - c(1.0)) * inv_sqrt2::<R>(), c(0.0), xi]
}

fn inv_sqrt2<R: Real>() -> R {
    // Newton on r² = 1/2 starting from the f64 value
    let mut r = c::<R>(std::f64::consts::FRAC_1_SQRT_2);
    for _ in 0..3 {
        r = r * (c::<R>(1.5) - r * r);
    }
    r
}

/// The shooting function: `w` at the second crossing, plus the `x`
/// coordinates at the start and the two crossings.
pub fn shoot<R: Real>(xi: R, x: R, gbs: &Gbs) -> Option<(R, [R; 3], [Crossing<R>; 2])> {
    let u = embed(xi, x);
    let cr = crossings(&u, 2, gbs, 40.0)?;
    Some((cr[1].state[3], [x, cr[0].state[0], cr[1].state[0]], [cr[0], cr[1]]))
}

pub fn g_value(xi: f64, x: f64) -> Option<f64> {
    shoot(DD::new(xi), DD::new(x), &Gbs::dd_default()).map(|r| r.0.to_f64())
}

/// Partial derivatives of `g_value` by central differences in double-double.
#[derive(Clone, Copy, Debug)]
pub struct GPartials {
    pub g: f64,
    pub g_x: f64,
    pub g_xi: f64,
    pub g_xx: f64,
    pub g_xxi: f64,
    pub g_xixi: f64,
}

pub fn g_partials(xi: f64, x: f64) -> Option<GPartials> {
    let gbs = Gbs::dd_default();
    let eval = |a: f64, b: f64| -> Option<DD> {
        shoot(DD::new(xi) + DD::new(a), DD::new(x) + DD::new(b), &gbs).map(|r| r.0)
    };
    let e1 = 1e-7;
    let e2 = 1e-5;
    let g = eval(0.0, 0.0)?;
    let fx = |e: f64| -> Option<f64> { Some(((eval(0.0, e)? - eval(0.0, -e)?) / DD::new(2.0 * e)).to_f64()) };
    let fxi = |e: f64| -> Option<f64> { Some(((eval(e, 0.0)? - eval(-e, 0.0)?) / DD::new(2.0 * e)).to_f64()) };
    let g_x = fx(e1)?;
    let g_xi = fxi(e1)?;
    let g_xx = ((eval(0.0, e2)? - g - g + eval(0.0, -e2)?) / DD::new(e2 * e2)).to_f64();
    let g_xixi = ((eval(e2, 0.0)? - g - g + eval(-e2, 0.0)?) / DD::new(e2 * e2)).to_f64();
    let g_xxi = ((eval(e2, e2)? - eval(e2, -e2)? - eval(-e2, e2)? + eval(-e2, -e2)?)
        / DD::new(4.0 * e2 * e2))
    .to_f64();
    Some(GPartials { g: g.to_f64(), g_x, g_xi, g_xx, g_xxi, g_xixi })
}

/// Solves `G(ξ, x) = 0` for `x` at fixed `ξ` (secant iteration).
pub fn solve_branch_point(xi: f64, x_guess: f64) -> Option<f64> {
    let gbs = Gbs::dd_default();
    let g = |x: DD| shoot(DD::new(xi), x, &gbs).map(|r| r.0);
    let mut x0 = DD::new(x_guess);
    let mut x1 = DD::new(x_guess + 1e-7);
    let mut g0 = g(x0)?;
    for _ in 0..60 {
        let g1 = g(x1)?;
        let dg = g1 - g0;
        if dg.to_f64() == 0.0 {
            break;
        }
        let step = g1 * (x1 - x0) / dg;
        x0 = x1;
        g0 = g1;
        x1 = x1 - step;
        if step.to_f64().abs() < 1e-28 {
            break;
        }
    }
    Some(x1.to_f64())
}

/// Newton's method on `H = (G, G_x)` with derivatives by finite differences.
pub fn solve_fold(xi0: f64, x0: f64, iterations: usize) -> Option<(f64, f64)> {
    let (mut xi, mut x) = (xi0, x0);
    for _ in 0..iterations {
        let p = g_partials(xi, x)?;
        let det = p.g_xi * p.g_xx - p.g_x * p.g_xxi;
        if det == 0.0 {
            return None;
        }
        let dxi = (p.g * p.g_xx - p.g_x * p.g_x) / det;
        let dx = (p.g_xi * p.g_x - p.g_xxi * p.g) / det;
        xi -= dxi;
        x -= dx;
        if dxi.abs() < 1e-17 && dx.abs() < 1e-17 {
            break;
        }
    }
    Some((xi, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_double_arithmetic() {
        let third = DD::new(1.0) / DD::new(3.0);
        let back = third * DD::new(3.0) - DD::new(1.0);
        assert!(back.to_f64().abs() < 1e-31);
        assert!(third.lo != 0.0);
        let r = inv_sqrt2::<DD>();
        assert!((r * r - DD::new(0.5)).to_f64().abs() < 1e-31);
    }

    #[test]
    fn harmonic_oscillator_is_reproduced() {
        // with the cubic term off and ξ = 2: x'''' + 2x'' − x = 0 has the
        // exact solution cosh(λt) for λ² = −1 + √2
        let gbs = Gbs { cubic: false, ..Gbs::dd_default() };
        let l2 = 2f64.sqrt() - 1.0;
        let l = l2.sqrt();
        let u: State<DD> = [DD::new(1.0), DD::new(0.0), DD::new(l2), DD::new(0.0), DD::new(2.0)];
        let t = 1.3;
        let end = gbs.flow(&u, t);
        assert!((end[0].to_f64() - (l * t).cosh()).abs() < 1e-14);
    }

    #[test]
    fn macro_step_refinement_agrees() {
        let u = embed(DD::new(2.03), DD::new(-1.58));
        let a = Gbs::dd_default().flow(&u, 3.0);
        let b = Gbs { macro_step: 0.02, ..Gbs::dd_default() }.flow(&u, 3.0);
        for i in 0..5 {
            assert!((a[i] - b[i]).to_f64().abs() < 1e-24, "component {i}");
        }
    }

    #[test]
    fn energy_is_conserved() {
        let u = embed(2.03f64, -1.58);
        let e0 = energy(&u);
        let cr = crossings(&u, 4, &Gbs::f64_default(), 40.0).unwrap();
        let mut t = 0.0;
        let gbs = Gbs::f64_default();
        let mut v = u;
        while t < cr[3].time {
            v = gbs.step(&v, 0.05);
            t += 0.05;
            assert!((energy(&v) - e0).abs() < 1e-10);
        }
    }
}
