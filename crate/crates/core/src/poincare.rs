//! Poincaré map on the section `Π = {y = 0}`, its first and second
//! derivatives, and the shooting function
//!
//! ```text
//! G(ξ, x) = π_w P²(x, 0, (x² − 1)/√2, 0, ξ)
//! ```
//!
//! whose zeros are even periodic orbits on the zero-energy level.
//!
//! Crossings are counted in both directions: consecutive crossings are
//! consecutive extrema of `u`, so the sign of `z = y'` alternates.
//!
//! With `P(x) = φ(τ(x), x)` and `y(P) ≡ 0` the derivatives are
//!
//! ```text
//! τ_j    = −V_yj / f_y
//! ∂_j P  = V_j + f τ_j
//! τ_jk   = −(H_yjk + (Df V_j)_y τ_k + (Df ∂_k P)_y τ_j) / f_y
//! ∂²_jk P = H_jk + Df V_j τ_k + Df ∂_k P τ_j + f τ_jk
//! ```
//!
//! where `V = Dφ`, `H = D²φ` are taken at the crossing time and `f`, `Df`
//! at the crossing point.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::interval::{inv_sqrt2, sqrt2, Interval, IntervalVector};
use crate::model::{self, ExtendedState};
use crate::odeint::{
    pair_count, pair_index, AffineSet, FlowEnclosure, InitialData, IntegratorConfig, Integrator, OdeError,
    StepData, Vec5, VarOrder,
};

const Y: usize = 1;
/// Crossing times are refined until their width is below this.
const TIME_TOL: f64 = 1e-10;
/// Give up if no crossing is found before this time.
const T_MAX: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoincareError {
    #[error("crossing at t ≈ {t} is not transversal (0 ∈ z)")]
    NonTransversalCrossing { t: f64 },
    #[error("lost the enclosure near t ≈ {t}: {reason}")]
    LostEnclosure { t: f64, reason: &'static str },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Integration(#[from] OdeError),
}

/// One certified crossing of `Π`.
#[derive(Clone, Debug)]
pub struct CrossingResult {
    /// Extended state `(x, 0, z, w, ξ)`; the `y` component is exactly zero.
    pub state: Vec5,
    pub crossing_time: Interval,
    pub transversal: bool,
    /// Columns `∂_j P` for each initial direction.
    pub derivative: Option<Vec<Vec5>>,
    /// Packed columns `∂²_jk P` (see [`pair_index`]).
    pub second: Option<Vec<Vec5>>,
    pub extremum_x: Interval,
}

fn y_sign(v: Interval) -> Option<bool> {
    if v.is_positive() {
        Some(true)
    } else if v.is_negative() {
        Some(false)
    } else {
        None
    }
}

/// Certified enclosures of the first `n` crossings of `Π` starting from
/// `init`, with derivatives up to `order` with respect to the directions
/// of `init`.
pub fn poincare_map(
    init: InitialData,
    order: VarOrder,
    n: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<CrossingResult>, PoincareError> {
    if n == 0 {
        return Err(PoincareError::InvalidInput("need at least one crossing".into()));
    }
    let mut integ = Integrator::new(init, order, *cfg)?;
    let start_y = integ.state()[Y];
    if start_y.contains_zero() && start_y != Interval::ZERO {
        return Err(PoincareError::InvalidInput("start straddles the section".into()));
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if integ.time.hi() > T_MAX {
            return Err(PoincareError::LostEnclosure { t: integ.time.mid(), reason: "no crossing found" });
        }
        advance(&mut integ, cfg, &mut out)?;
    }
    Ok(out)
}

/// One accepted step, recording a crossing if it happens inside the step.
fn advance(integ: &mut Integrator, cfg: &IntegratorConfig, out: &mut Vec<CrossingResult>) -> Result<(), PoincareError> {
    let mut h_max = cfg.max_step;
    loop {
        let t = integ.time.mid();
        let data = integ.prepare(h_max)?;
        let ys = integ.state()[Y];
        let tube = data.tube;
        if !tube[Y].contains_zero() {
            integ.commit(&data)?;
            return Ok(());
        }
        let shrink = |h: f64| {
            let next = 0.5 * h;
            (next >= cfg.min_step).then_some(next)
        };
        if tube[2].contains_zero() {
            h_max = shrink(data.h).ok_or(PoincareError::NonTransversalCrossing { t })?;
            continue;
        }
        // y is strictly monotone over the step
        let Some(s0) = y_sign(ys) else {
            if ys == Interval::ZERO && integ.time == Interval::ZERO {
                // leaving the section transversally
                integ.commit(&data)?;
                return Ok(());
            }
            return Err(PoincareError::LostEnclosure { t, reason: "step starts on the section" });
        };
        let ye = data.state_at(&integ.set, Interval::point(data.h))[Y];
        match y_sign(ye) {
            Some(s1) if s1 == s0 => {
                integ.commit(&data)?;
                return Ok(());
            }
            Some(_) => {
                out.push(crossing(integ, &data)?);
                integ.commit(&data)?;
                return Ok(());
            }
            None => {
                h_max = shrink(data.h)
                    .ok_or(PoincareError::LostEnclosure { t, reason: "cannot isolate the sign change" })?;
            }
        }
    }
}

/// Interval Newton in time on `t ↦ y(t)`, with `y' = z`.
fn crossing_time(set: &AffineSet, data: &StepData) -> Result<Interval, PoincareError> {
    let mut t = Interval::new(0.0, data.h).expect("h > 0");
    for _ in 0..40 {
        let tm = Interval::point(t.mid());
        let ym = data.state_at(set, tm)[Y];
        let dz = data.state_at(set, t)[2].intersect(data.tube[2]).unwrap_or(data.tube[2]);
        if dz.contains_zero() {
            break;
        }
        let n = tm - ym / dz;
        let Some(next) = t.intersect(n) else {
            return Err(PoincareError::LostEnclosure { t: t.mid(), reason: "empty crossing-time enclosure" });
        };
        let improved = next.diam() < 0.9 * t.diam();
        t = next;
        if t.diam() <= TIME_TOL || !improved {
            break;
        }
    }
    Ok(t)
}

fn crossing(integ: &Integrator, data: &StepData) -> Result<CrossingResult, PoincareError> {
    let t_local = crossing_time(&integ.set, data)?;
    let mut probe = integ.clone();
    let enc: FlowEnclosure = probe.commit_at(data, t_local)?;
    let mut state = enc.end.intersect_or(&data.tube);
    state[Y] = Interval::ZERO;
    let ext = ExtendedState::from_vector(&state);
    let f = model::extended_vector_field(&ext);
    let fy = f[Y];
    if fy.contains_zero() {
        return Err(PoincareError::NonTransversalCrossing { t: probe.time.mid() });
    }
    let mut derivative = None;
    let mut second = None;
    if let Some(v) = &enc.monodromy {
        let df = model::extended_jacobian(&ext);
        let tau: Vec<Interval> = v.iter().map(|c| -(c[Y] / fy)).collect();
        let dp: Vec<Vec5> = v
            .iter()
            .zip(&tau)
            .map(|(c, &tj)| {
                let mut col = *c + f.map(|fi| fi * tj);
                col[Y] = Interval::ZERO;
                col
            })
            .collect();
        if let Some(h) = &enc.second_variations {
            let m = v.len();
            let dfv: Vec<Vec5> = v.iter().map(|c| df.mul_vec(c)).collect();
            let dfdp: Vec<Vec5> = dp.iter().map(|c| df.mul_vec(c)).collect();
            let mut cols = vec![Vec5::zero(); pair_count(m)];
            for j in 0..m {
                for k in j..m {
                    let hjk = h[pair_index(m, j, k)];
                    let tau_jk = -((hjk[Y] + dfv[j][Y] * tau[k] + dfdp[k][Y] * tau[j]) / fy);
                    let mut col = IntervalVector::from_fn(|i| {
                        hjk[i] + dfv[j][i] * tau[k] + dfdp[k][i] * tau[j] + f[i] * tau_jk
                    });
                    col[Y] = Interval::ZERO;
                    cols[pair_index(m, j, k)] = col;
                }
            }
            second = Some(cols);
        }
        derivative = Some(dp);
    }
    Ok(CrossingResult {
        state,
        crossing_time: probe.time,
        transversal: true,
        derivative,
        second,
        extremum_x: state[0],
    })
}

trait IntersectOr {
    fn intersect_or(&self, other: &Self) -> Self;
}

impl IntersectOr for Vec5 {
    /// Componentwise intersection, keeping `self` where it is empty.
    fn intersect_or(&self, other: &Self) -> Self {
        IntervalVector::from_fn(|i| self[i].intersect(other[i]).unwrap_or(self[i]))
    }
}

/// Crossings of a box with the identity as initial derivative.
pub fn poincare_map_box(
    x: &Vec5,
    order: VarOrder,
    n: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<CrossingResult>, PoincareError> {
    poincare_map(InitialData::from_box(x, order), order, n, cfg)
}

/// Second partials of `G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GSecond {
    pub xx: Interval,
    pub xxi: Interval,
    pub xixi: Interval,
}

/// `G` over a parameter box and a section box, with optional derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GEvaluation {
    pub value: Interval,
    pub d_dx: Option<Interval>,
    pub d_dxi: Option<Interval>,
    pub d2: Option<GSecond>,
    /// `x` at the start and at each crossing.
    pub extrema: Vec<Interval>,
    pub crossing_times: Vec<Interval>,
}

/// The start set `e(Ξ, X) = (X, 0, (X² − 1)/√2, 0, Ξ)` as a doubleton whose
/// linear part is exact in `(ξ, x)`, with `De` and `D²e` as initial
/// derivatives for the directions `(ξ, x)`.
pub fn embedding(xi: Interval, x: Interval, order: VarOrder) -> InitialData {
    let xm = x.mid();
    let xim = xi.mid();
    let z0 = model::section_z(Interval::point(xm));
    let zc = z0.mid();
    let slope = sqrt2() * Interval::point(xm);
    let cz = slope.mid();
    let dx = x - Interval::point(xm);
    let mut c = [[0.0; 5]; 5];
    c[0][0] = 1.0;
    c[2][0] = cz;
    c[4][4] = 1.0;
    let mut r0 = Vec5::zero();
    r0[0] = dx;
    r0[4] = xi - Interval::point(xim);
    let mut r = Vec5::zero();
    r[2] = (z0 - Interval::point(zc)) + (slope - Interval::point(cz)) * dx + dx.sqr() * inv_sqrt2();
    let mut b = [[0.0; 5]; 5];
    for (i, row) in b.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let set = AffineSet { center: [xm, 0.0, zc, 0.0, xim], c, r0, b, r };
    let mut v0 = Vec::new();
    let mut h0 = Vec::new();
    if order >= VarOrder::First {
        let mut e_xi = Vec5::zero();
        e_xi[4] = Interval::ONE;
        let mut e_x = Vec5::zero();
        e_x[0] = Interval::ONE;
        e_x[2] = sqrt2() * x;
        v0 = vec![e_xi, e_x];
    }
    if order >= VarOrder::Second {
        let mut e_xx = Vec5::zero();
        e_xx[2] = sqrt2();
        h0 = vec![Vec5::zero(); pair_count(2)];
        h0[pair_index(2, 1, 1)] = e_xx;
    }
    InitialData { set, v0, h0 }
}

/// Index of the `ξ` direction in [`embedding`].
pub const DIR_XI: usize = 0;
/// Index of the `x` direction in [`embedding`].
pub const DIR_X: usize = 1;

/// Evaluates `G` (and its partials up to `order`) over `Ξ × X`.
pub fn eval_g(xi: Interval, x: Interval, cfg: &IntegratorConfig, order: VarOrder) -> Result<GEvaluation, PoincareError> {
    if !(x.hi() < -1.0) {
        return Err(PoincareError::InvalidInput(format!("x = {x:?} must lie below -1")));
    }
    if !(xi.lo() >= 0.0 && xi.hi() <= model::xi_max().lo()) {
        return Err(PoincareError::InvalidInput(format!("xi = {xi:?} outside [0, sqrt 8]")));
    }
    let cr = poincare_map(embedding(xi, x, order), order, 2, cfg)?;
    let last = &cr[1];
    let w = 3;
    let (d_dx, d_dxi) = match &last.derivative {
        Some(d) => (Some(d[DIR_X][w]), Some(d[DIR_XI][w])),
        None => (None, None),
    };
    let d2 = last.second.as_ref().map(|s| GSecond {
        xx: s[pair_index(2, DIR_X, DIR_X)][w],
        xxi: s[pair_index(2, DIR_XI, DIR_X)][w],
        xixi: s[pair_index(2, DIR_XI, DIR_XI)][w],
    });
    Ok(GEvaluation {
        value: last.state[w],
        d_dx,
        d_dxi,
        d2,
        extrema: vec![x, cr[0].extremum_x, cr[1].extremum_x],
        crossing_times: cr.iter().map(|c| c.crossing_time).collect(),
    })
}

/// Anything that can stand in for `G` in the continuation and fold layers.
pub trait GFunction: Sync {
    fn eval(&self, xi: Interval, x: Interval, order: VarOrder) -> Result<GEvaluation, PoincareError>;
}

/// The shooting function of the Swift–Hohenberg system.
#[derive(Clone, Copy, Debug, Default)]
pub struct ShootingG {
    pub cfg: IntegratorConfig,
}

impl GFunction for ShootingG {
    fn eval(&self, xi: Interval, x: Interval, order: VarOrder) -> Result<GEvaluation, PoincareError> {
        eval_g(xi, x, &self.cfg, order)
    }
}

/// A [`GFunction`] given by a closure; used for model problems in tests.
pub struct FnG<F>(pub F);

impl<F> GFunction for FnG<F>
where
    F: Fn(Interval, Interval, VarOrder) -> GEvaluation + Sync,
{
    fn eval(&self, xi: Interval, x: Interval, order: VarOrder) -> Result<GEvaluation, PoincareError> {
        Ok((self.0)(xi, x, order))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub x0: Interval,
    pub x1: Interval,
    pub x2: Interval,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("extremum x{index} = {value:?} straddles ±1")]
    Indeterminate { index: usize, value: Interval },
    #[error("extremum x{index} = {value:?} violates the ordering")]
    Violated { index: usize, value: Interval },
    #[error("expected three extrema, got {0}")]
    Missing(usize),
}

/// Checks `x₀ < −1`, `x₁ > 1` and `−1 < x₂ < 1` strictly.
pub fn check_geometry(g: &GEvaluation) -> Result<GeometryReport, GeometryError> {
    check_extrema(&g.extrema)
}

pub fn check_extrema(ex: &[Interval]) -> Result<GeometryReport, GeometryError> {
    let [x0, x1, x2] = ex else {
        return Err(GeometryError::Missing(ex.len()));
    };
    let one = 1.0;
    let verdict = |index: usize, value: Interval, ok: bool, bad: bool| {
        if ok {
            Ok(())
        } else if bad {
            Err(GeometryError::Violated { index, value })
        } else {
            Err(GeometryError::Indeterminate { index, value })
        }
    };
    verdict(0, *x0, x0.hi() < -one, x0.lo() >= -one)?;
    verdict(1, *x1, x1.lo() > one, x1.hi() <= one)?;
    verdict(
        2,
        *x2,
        x2.lo() > -one && x2.hi() < one,
        x2.hi() <= -one || x2.lo() >= one,
    )?;
    Ok(GeometryReport { x0: *x0, x1: *x1, x2: *x2 })
}

/// Diagnostic dump of a crossing sequence.
pub fn write_crossings_csv<W: Write>(crossings: &[CrossingResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "index,t_lo,t_hi,x_lo,x_hi,z_lo,z_hi,w_lo,w_hi")?;
    for (i, c) in crossings.iter().enumerate() {
        let s = &c.state;
        writeln!(
            out,
            "{i},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            c.crossing_time.lo(),
            c.crossing_time.hi(),
            s[0].lo(),
            s[0].hi(),
            s[2].lo(),
            s[2].hi(),
            s[3].lo(),
            s[3].hi()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
