use crate::interval::{Interval, IntervalVector};
use crate::taylor::{self, sym_index, Coeff, Field, Jet1, Jet2, DIM, SYM};

use super::lohner::{self, lift, AffineSet, Mat5, Representation, Vec5};
use super::{IntegratorConfig, OdeError, VarOrder};

/// Packed second derivatives: `hess[i][sym_index(a, b)] = ∂²(·)_i/∂a∂b`.
pub type Hess = [[Interval; SYM]; DIM];

fn zero_hess() -> Hess {
    [[Interval::ZERO; SYM]; DIM]
}

trait JetData: Coeff {
    fn seed(x: &[Interval; DIM]) -> [Self; DIM];
    fn val(&self) -> Interval;
    fn grad(&self, a: usize) -> Interval;
    fn packed(&self) -> Option<&[Interval; SYM]>;
}

impl JetData for Jet1 {
    fn seed(x: &[Interval; DIM]) -> [Self; DIM] {
        Jet1::seed(x)
    }
    fn val(&self) -> Interval {
        self.v
    }
    fn grad(&self, a: usize) -> Interval {
        self.d[a]
    }
    fn packed(&self) -> Option<&[Interval; SYM]> {
        None
    }
}

impl JetData for Jet2 {
    fn seed(x: &[Interval; DIM]) -> [Self; DIM] {
        Jet2::seed(x)
    }
    fn val(&self) -> Interval {
        self.v
    }
    fn grad(&self, a: usize) -> Interval {
        self.d[a]
    }
    fn packed(&self) -> Option<&[Interval; SYM]> {
        Some(&self.h)
    }
}

/// Taylor coefficients over a set together with their derivatives.
struct TaylorData {
    val: Vec<Vec5>,
    d: Vec<Mat5>,
    d2: Option<Vec<Hess>>,
}

impl TaylorData {
    fn compute(field: Field, x: &Vec5, order: usize, second: bool) -> Self {
        if second {
            Self::from_jets::<Jet2>(field, x, order)
        } else {
            Self::from_jets::<Jet1>(field, x, order)
        }
    }

    fn from_jets<J: JetData>(field: Field, x: &Vec5, order: usize) -> Self {
        let coeffs = taylor::coefficients_of(field, &J::seed(&x.0), order);
        let mut val = Vec::with_capacity(order + 1);
        let mut d = Vec::with_capacity(order + 1);
        let mut d2 = Vec::new();
        for ck in &coeffs {
            val.push(Vec5::from_fn(|i| ck[i].val()));
            let mut m = Mat5::zero();
            for i in 0..DIM {
                for a in 0..DIM {
                    m[(i, a)] = ck[i].grad(a);
                }
            }
            d.push(m);
            if ck[0].packed().is_some() {
                let mut h = zero_hess();
                for i in 0..DIM {
                    h[i] = *ck[i].packed().unwrap();
                }
                d2.push(h);
            }
        }
        let d2 = (!d2.is_empty()).then_some(d2);
        TaylorData { val, d, d2 }
    }
}

fn horner_vec(c: &[Vec5], t: Interval) -> Vec5 {
    let mut acc = *c.last().expect("nonempty");
    for ck in c.iter().rev().skip(1) {
        acc = acc.map(|a| a * t) + *ck;
    }
    acc
}

fn horner_mat(c: &[Mat5], t: Interval) -> Mat5 {
    let mut acc = *c.last().expect("nonempty");
    for ck in c.iter().rev().skip(1) {
        for i in 0..DIM {
            for j in 0..DIM {
                acc[(i, j)] = acc[(i, j)] * t + ck[(i, j)];
            }
        }
    }
    acc
}

fn horner_hess(c: &[Hess], t: Interval) -> Hess {
    let mut acc = *c.last().expect("nonempty");
    for ck in c.iter().rev().skip(1) {
        for i in 0..DIM {
            for s in 0..SYM {
                acc[i][s] = acc[i][s] * t + ck[i][s];
            }
        }
    }
    acc
}

/// A validated step: everything needed to evaluate the flow, its
/// derivative and its second derivative at any time `t ⊂ [0, h]`.
#[derive(Clone, Debug)]
pub struct StepData {
    pub h: f64,
    /// Rough enclosure of `φ([0, h], [X])`.
    pub tube: Vec5,
    point: Vec<Vec5>,
    d: Vec<Mat5>,
    d2: Option<Vec<Hess>>,
    rem0: Vec5,
    rem1: Option<Mat5>,
    rem2: Option<Hess>,
    order: usize,
}

fn choose_step(point: &[Vec5], cfg: &IntegratorConfig, h_max: f64) -> f64 {
    let p = cfg.taylor_order;
    let mut h = f64::INFINITY;
    for k in [p - 1, p] {
        let n = point[k].0.iter().map(|c| c.mag()).fold(0.0, f64::max);
        if n > 0.0 {
            h = h.min((cfg.tolerance / n).powf(1.0 / k as f64));
        }
    }
    let h = if h.is_finite() { 0.9 * h } else { cfg.max_step };
    h.clamp(cfg.min_step.min(h_max), cfg.max_step).min(h_max)
}

/// `Σ_{k<p} c_k([X])·[0,h]^k + c_p(Y)·[0,h]^p`.
fn picard(field: Field, val_x: &[Vec5], y: &Vec5, h: f64, p: usize) -> Vec5 {
    let cy = taylor::coefficients_of(field, &y.0, p);
    let hh = Interval::new(0.0, h).expect("h >= 0");
    let mut c: Vec<Vec5> = val_x[..p].to_vec();
    c.push(IntervalVector(cy[p]));
    horner_vec(&c, hh)
}

fn rough_enclosure(field: Field, val_x: &[Vec5], h: f64, p: usize) -> Option<Vec5> {
    let hh = Interval::new(0.0, h).expect("h >= 0");
    let z = horner_vec(&val_x[..=p], hh);
    let mut y = z.map(|c| c.inflate(1.0 + 1e-3, 1e-12 + 1e-12 * c.mag()));
    for _ in 0..8 {
        let next = picard(field, val_x, &y, h, p);
        if !next.is_bounded() {
            return None;
        }
        if next.subset_interior(&y) {
            return Some(next);
        }
        y = y.hull(&next).map(|c| c.inflate(1.5, 1e-12 + 1e-10 * c.mag()));
    }
    None
}

impl StepData {
    pub(crate) fn prepare(
        field: Field,
        set: &AffineSet,
        order: VarOrder,
        cfg: &IntegratorConfig,
        h_max: f64,
        t: f64,
    ) -> Result<StepData, OdeError> {
        let p = cfg.taylor_order;
        let x = set.hull();
        if !x.is_bounded() {
            return Err(OdeError::Unbounded { t });
        }
        let center = Vec5::from_points(set.center);
        let point: Vec<Vec5> = taylor::coefficients_of(field, &center.0, p)
            .into_iter()
            .map(IntervalVector)
            .collect();
        let bx = TaylorData::compute(field, &x, p, order == VarOrder::Second);
        let mut h = choose_step(&point, cfg, h_max);
        loop {
            if let Some(tube) = rough_enclosure(field, &bx.val, h, p) {
                let rems = match order {
                    VarOrder::None => {
                        let cy = taylor::coefficients_of(field, &tube.0, p + 1);
                        Some((IntervalVector(cy[p + 1]), None, None))
                    }
                    _ => {
                        let ty = TaylorData::compute(field, &tube, p + 1, order == VarOrder::Second);
                        variational_remainders(&bx, &ty, h, p).map(|(r1, r2)| (ty.val[p + 1], Some(r1), r2))
                    }
                };
                if let Some((rem0, rem1, rem2)) = rems {
                    return Ok(StepData {
                        h,
                        tube,
                        point,
                        d: bx.d,
                        d2: bx.d2,
                        rem0,
                        rem1,
                        rem2,
                        order: p,
                    });
                }
            }
            h *= 0.5;
            if h < cfg.min_step {
                return Err(OdeError::ValidationFailed { t, h });
            }
        }
    }

    fn tpow(&self, t: Interval) -> Interval {
        t.powi(self.order as u32 + 1)
    }

    /// Enclosure of `φ(t, x̄)` for the centre `x̄` of the step's set.
    pub fn center_at(&self, t: Interval) -> Vec5 {
        let tp = self.tpow(t);
        horner_vec(&self.point, t) + self.rem0.map(|c| c * tp)
    }

    /// `Σ Dc_k([X]) t^k`, the derivative of the Taylor polynomial.
    pub fn jacobian_at(&self, t: Interval) -> Mat5 {
        horner_mat(&self.d, t)
    }

    /// Enclosure of `Dφ(t, x)` over the step's set.
    pub fn derivative_at(&self, t: Interval) -> Mat5 {
        let j = self.jacobian_at(t);
        match &self.rem1 {
            Some(r) => {
                let tp = self.tpow(t);
                let mut m = j;
                for i in 0..DIM {
                    for a in 0..DIM {
                        m[(i, a)] += r[(i, a)] * tp;
                    }
                }
                m
            }
            None => j,
        }
    }

    /// Enclosure of `D²φ(t, x)` over the step's set.
    pub fn second_at(&self, t: Interval) -> Hess {
        let (Some(d2), Some(r2)) = (&self.d2, &self.rem2) else {
            return zero_hess();
        };
        let mut k = horner_hess(d2, t);
        let tp = self.tpow(t);
        for i in 0..DIM {
            for s in 0..SYM {
                k[i][s] += r2[i][s] * tp;
            }
        }
        k
    }

    /// Enclosure of `φ(t, set)` without changing the representation.
    pub fn state_at(&self, set: &AffineSet, t: Interval) -> Vec5 {
        let y = self.center_at(t);
        let j = self.jacobian_at(t);
        y + j.mul_mat(&lift(&set.c)).mul_vec(&set.r0) + j.mul_mat(&lift(&set.b)).mul_vec(&set.r)
    }

    /// Image of `set` at time `t`, together with the matrix that maps the
    /// variational columns.
    pub fn advance_set(&self, set: &AffineSet, t: Interval, rep: Representation) -> (AffineSet, Mat5) {
        let y = self.center_at(t);
        let j = self.jacobian_at(t);
        let jc = j.mul_mat(&lift(&set.c));
        let jb = j.mul_mat(&lift(&set.b));
        let m = self.derivative_at(t);
        if rep == Representation::Box {
            let hull = y + jc.mul_vec(&set.r0) + jb.mul_vec(&set.r);
            let center = hull.mid();
            let out = AffineSet {
                center,
                c: [[0.0; 5]; 5],
                r0: set.r0,
                b: lohner::identity(),
                r: hull - Vec5::from_points(center),
            };
            return (out, m);
        }
        let center = y.mid();
        let delta = y - Vec5::from_points(center);
        let c_new = jc.mid();
        let extra = (jc - lift(&c_new)).mul_vec(&set.r0) + delta;
        let weights: [f64; 5] = std::array::from_fn(|i| set.r[i].rad());
        let frame = lohner::new_frame(&jb.mid(), &weights, rep);
        let r = frame.apply(&jb, &set.r, &extra);
        (AffineSet { center, c: c_new, r0: set.r0, b: frame.q, r }, m)
    }
}

fn widen_mat(m: &Mat5) -> Mat5 {
    let mut o = *m;
    for i in 0..DIM {
        for j in 0..DIM {
            o[(i, j)] = o[(i, j)].inflate(1.1, 1e-14 + 1e-12 * o[(i, j)].mag());
        }
    }
    o
}

fn hess_subset_interior(a: &Hess, b: &Hess) -> bool {
    (0..DIM).all(|i| (0..SYM).all(|s| a[i][s].subset_interior(b[i][s])))
}

/// `Σ_c Dp_{ic} Z_c + Wᵀ H_i W` for each component `i`: the `(p+1)`-st
/// coefficient of `D²φ` given enclosures of `Dφ` (`w`) and `D²φ` (`z`).
fn second_coefficient(dp: &Mat5, hp: &Hess, w: &Mat5, z: &Hess) -> Hess {
    let mut out = zero_hess();
    for i in 0..DIM {
        let mut hi = Mat5::zero();
        for a in 0..DIM {
            for b in 0..DIM {
                hi[(a, b)] = hp[i][sym_index(a, b)];
            }
        }
        let whw = w.transpose().mul_mat(&hi.mul_mat(w));
        for a in 0..DIM {
            for b in a..DIM {
                let s = sym_index(a, b);
                let mut acc = whw[(a, b)];
                for (c, zc) in z.iter().enumerate() {
                    if dp[(i, c)] != Interval::ZERO {
                        acc += dp[(i, c)] * zc[s];
                    }
                }
                out[i][s] = acc;
            }
        }
    }
    out
}

/// Lagrange remainders of the first and second variational equations.
///
/// With `W ⊇ Dφ([0,h], X)` the `(p+1)`-st coefficient of `Dφ` at any
/// intermediate time lies in `Dc_{p+1}(Y)·W`; `W` itself is validated by
/// `Σ_{k≤p} Dc_k(X)[0,h]^k + Dc_{p+1}(Y)·W·[0,h]^{p+1} ⊂ int W`. The second
/// order case is the same with `Z ⊇ D²φ([0,h], X)`.
fn variational_remainders(bx: &TaylorData, ty: &TaylorData, h: f64, p: usize) -> Option<(Mat5, Option<Hess>)> {
    let hh = Interval::new(0.0, h).expect("h >= 0");
    let hp = hh.powi(p as u32 + 1);
    let dp = ty.d[p + 1];
    let base = horner_mat(&bx.d[..=p], hh);
    let mut w = widen_mat(&base);
    let mut found = None;
    for _ in 0..8 {
        let mut next = dp.mul_mat(&w);
        for i in 0..DIM {
            for j in 0..DIM {
                next[(i, j)] = base[(i, j)] + next[(i, j)] * hp;
            }
        }
        if !next.is_bounded() {
            return None;
        }
        if (0..DIM).all(|i| (0..DIM).all(|j| next[(i, j)].subset_interior(w[(i, j)]))) {
            found = Some(next);
            break;
        }
        w = widen_mat(&w.hull(&next));
    }
    let w = found?;
    let rem1 = dp.mul_mat(&w);
    let (Some(d2x), Some(d2y)) = (&bx.d2, &ty.d2) else {
        return Some((rem1, None));
    };
    let h2 = &d2y[p + 1];
    let base2 = horner_hess(&d2x[..=p], hh);
    let widen = |z: &Hess| z.map(|row| row.map(|c| c.inflate(1.1, 1e-14 + 1e-12 * c.mag())));
    let mut z = widen(&base2);
    for _ in 0..8 {
        let r = second_coefficient(&dp, h2, &w, &z);
        let mut next = base2;
        for i in 0..DIM {
            for s in 0..SYM {
                next[i][s] += r[i][s] * hp;
            }
        }
        if !next.iter().all(|row| row.iter().all(|c| c.is_bounded())) {
            return None;
        }
        if hess_subset_interior(&next, &z) {
            return Some((rem1, Some(second_coefficient(&dp, h2, &w, &next))));
        }
        let mut hull = z;
        for i in 0..DIM {
            for s in 0..SYM {
                hull[i][s] = z[i][s].hull(next[i][s]);
            }
        }
        z = widen(&hull);
    }
    None
}
