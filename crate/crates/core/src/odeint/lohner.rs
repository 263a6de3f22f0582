//! Set representations that keep the wrapping effect under control.
//!
//! The state is carried as a doubleton `x̄ + C·r0 + B·r`: `C·r0` transports
//! the initial box linearly (`C` is recomputed as a midpoint matrix each
//! step, `r0` never changes) and `B·r` collects everything else in a
//! coordinate frame `B = Q` from a QR factorisation of the propagated
//! frame. Variational columns use the single-part form `v̄ + B·r` with a
//! frame shared across columns.

use crate::interval::{round, Interval, IntervalMatrix, IntervalVector};

pub type Vec5 = IntervalVector<5>;
pub type Mat5 = IntervalMatrix<5, 5>;
pub type Point5 = [f64; 5];
pub type PMat5 = [[f64; 5]; 5];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    /// QR-stabilised doubleton (the default).
    Doubleton,
    /// Re-boxed every step; diagnostic only.
    Box,
}

pub fn identity() -> PMat5 {
    let mut m = [[0.0; 5]; 5];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn lift(m: &PMat5) -> Mat5 {
    IntervalMatrix::from_points(*m)
}

fn lift_point(p: &Point5) -> Vec5 {
    IntervalVector::from_points(*p)
}

/// `x̄ + C·r0 + B·r`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSet {
    pub center: Point5,
    pub c: PMat5,
    pub r0: Vec5,
    pub b: PMat5,
    pub r: Vec5,
}

impl AffineSet {
    pub fn from_box(x: &Vec5) -> Self {
        let center = x.mid();
        AffineSet {
            center,
            c: identity(),
            r0: *x - lift_point(&center),
            b: identity(),
            r: Vec5::zero(),
        }
    }

    pub fn hull(&self) -> Vec5 {
        lift_point(&self.center) + lift(&self.c).mul_vec(&self.r0) + lift(&self.b).mul_vec(&self.r)
    }
}

/// Columns `v̄_j + B·r_j` with a common frame `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSet {
    pub bar: Vec<Point5>,
    pub b: PMat5,
    pub r: Vec<Vec5>,
}

impl ColumnSet {
    pub fn from_columns(cols: &[Vec5]) -> Self {
        let bar: Vec<Point5> = cols.iter().map(|c| c.mid()).collect();
        let r = cols
            .iter()
            .zip(&bar)
            .map(|(c, m)| *c - lift_point(m))
            .collect();
        ColumnSet { bar, b: identity(), r }
    }

    pub fn len(&self) -> usize {
        self.bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bar.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec5 {
        lift_point(&self.bar[j]) + lift(&self.b).mul_vec(&self.r[j])
    }

    pub fn columns(&self) -> Vec<Vec5> {
        (0..self.len()).map(|j| self.column(j)).collect()
    }

    /// Image under `v ↦ M v + s_j`, where `M` encloses a family of linear
    /// maps and `s_j` is an additive source for column `j`.
    pub fn propagate(&self, m: &Mat5, src: Option<&[Vec5]>, rep: Representation) -> ColumnSet {
        let mb = m.mul_mat(&lift(&self.b));
        let ys: Vec<Vec5> = self
            .bar
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let y = m.mul_vec(&lift_point(v));
                match src {
                    Some(s) => y + s[j],
                    None => y,
                }
            })
            .collect();
        let bar: Vec<Point5> = ys.iter().map(|y| y.mid()).collect();
        let weights = column_weights(&self.r);
        let frame = new_frame(&mb.mid(), &weights, rep);
        let r = ys
            .iter()
            .zip(&bar)
            .zip(&self.r)
            .map(|((y, c), r)| {
                let delta = *y - lift_point(c);
                frame.apply(&mb, r, &delta)
            })
            .collect();
        ColumnSet { bar, b: frame.q, r }
    }
}

fn column_weights(r: &[Vec5]) -> [f64; 5] {
    let mut w = [0.0f64; 5];
    for v in r {
        for i in 0..5 {
            w[i] = w[i].max(v[i].rad());
        }
    }
    w
}

/// A new coordinate frame `Q` with a rigorous enclosure of `Q⁻¹`.
pub(crate) struct Frame {
    pub q: PMat5,
    pub q_inv: Mat5,
    pub boxed: bool,
}

impl Frame {
    /// `Q⁻¹ (MB) r + Q⁻¹ δ`.
    pub fn apply(&self, mb: &Mat5, r: &Vec5, delta: &Vec5) -> Vec5 {
        if self.boxed {
            return mb.mul_vec(r) + *delta;
        }
        self.q_inv.mul_mat(mb).mul_vec(r) + self.q_inv.mul_vec(delta)
    }
}

pub(crate) fn new_frame(a: &PMat5, weights: &[f64; 5], rep: Representation) -> Frame {
    if rep == Representation::Box {
        return Frame { q: identity(), q_inv: Mat5::identity(), boxed: true };
    }
    let q = pivoted_qr(a, weights);
    match orthogonal_inverse(&q) {
        Some(q_inv) => Frame { q, q_inv, boxed: false },
        None => Frame { q: identity(), q_inv: Mat5::identity(), boxed: true },
    }
}

/// Orthogonal factor of a Householder QR of the leading 4×4 block of `a`
/// after sorting its columns by `‖a_j‖·w_j`, so the directions that carry
/// the most width are kept most accurately. The parameter axis (index 4)
/// is left fixed: `ξ` is constant along the flow, so keeping it out of the
/// rotation keeps its enclosure exact.
pub fn pivoted_qr(a: &PMat5, weights: &[f64; 5]) -> PMat5 {
    const N: usize = 4;
    let mut order: Vec<usize> = (0..N).collect();
    let score = |j: usize| {
        let n: f64 = (0..N).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt();
        n * weights[j]
    };
    order.sort_by(|&i, &j| score(j).total_cmp(&score(i)).then(i.cmp(&j)));
    let mut r = [[0.0; N]; N];
    for (k, &j) in order.iter().enumerate() {
        for i in 0..N {
            r[i][k] = a[i][j];
        }
    }
    let mut q = identity();
    for k in 0..N {
        let norm: f64 = (k..N).map(|i| r[i][k] * r[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        let alpha = if r[k][k] > 0.0 { -norm } else { norm };
        let mut v = [0.0; N];
        v[k] = r[k][k] - alpha;
        for i in k + 1..N {
            v[i] = r[i][k];
        }
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in 0..N {
            let s: f64 = (k..N).map(|i| v[i] * r[i][j]).sum::<f64>() * 2.0 / vv;
            for i in k..N {
                r[i][j] -= s * v[i];
            }
        }
        for row in q.iter_mut().take(N) {
            let s: f64 = (k..N).map(|i| row[i] * v[i]).sum::<f64>() * 2.0 / vv;
            for i in k..N {
                row[i] -= s * v[i];
            }
        }
    }
    q
}

/// Enclosure of `Q⁻¹` for a nearly orthogonal `Q`: with `X = Qᵀ` and
/// `E = I − XQ`, `‖Q⁻¹ − X‖∞ ≤ ‖E‖∞‖X‖∞ / (1 − ‖E‖∞)`.
pub fn orthogonal_inverse(q: &PMat5) -> Option<Mat5> {
    let x = lift(q).transpose();
    let e = Mat5::identity() - x.mul_mat(&lift(q));
    let norm = |m: &Mat5| {
        (0..5)
            .map(|i| (0..5).fold(0.0, |acc, j| round::add_up(acc, m[(i, j)].mag())))
            .fold(0.0, f64::max)
    };
    let ne = norm(&e);
    if ne >= 0.5 {
        return None;
    }
    let bound = round::div_up(round::mul_up(ne, norm(&x)), round::sub_down(1.0, ne));
    let slack = Interval::symmetric(bound);
    // a frame that fixes the parameter axis has an inverse that fixes it too
    let fixed = (0..5).all(|k| {
        let e = if k == 4 { 1.0 } else { 0.0 };
        q[4][k] == e && q[k][4] == e
    });
    let mut out = x;
    for i in 0..5 {
        for j in 0..5 {
            if fixed && (i == 4 || j == 4) {
                continue;
            }
            out[(i, j)] += slack;
        }
    }
    Some(out)
}
