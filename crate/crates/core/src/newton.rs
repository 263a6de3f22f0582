//! Interval Newton operators: scalar, parameterized (a family of scalar
//! problems over a parameter box) and two-dimensional.
//!
//! All three report `Proven` exactly when the operator is defined and
//! `N ⊂ int X`. `Defect` means the derivative enclosure is singular, so the
//! caller should shrink the box; `Inconclusive` means `N` escaped `X`, so
//! inflating or recentring may help.

use serde::{Deserialize, Serialize};

use crate::interval::{mat_inverse, Interval, IntervalMatrix, IntervalVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStatus {
    Proven,
    Inconclusive,
    Defect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub status: NewtonStatus,
    /// `N ∩ X` when nonempty, otherwise `N` (or `X` for a defect).
    pub refined: Vec<Interval>,
    pub uniqueness_box: Vec<Interval>,
    /// Row-major derivative enclosure `[A]`.
    pub derivative_used: Vec<Vec<Interval>>,
}

impl NewtonOutcome {
    pub fn is_proven(&self) -> bool {
        self.status == NewtonStatus::Proven
    }

    fn build(n: &[Interval], x: &[Interval], a: Vec<Vec<Interval>>) -> Self {
        let proven = n.iter().zip(x).all(|(n, x)| n.subset_interior(*x));
        let meet: Option<Vec<Interval>> = n.iter().zip(x).map(|(n, x)| n.intersect(*x)).collect();
        NewtonOutcome {
            status: if proven { NewtonStatus::Proven } else { NewtonStatus::Inconclusive },
            refined: meet.unwrap_or_else(|| n.to_vec()),
            uniqueness_box: x.to_vec(),
            derivative_used: a,
        }
    }

    fn defect(x: &[Interval], a: Vec<Vec<Interval>>) -> Self {
        NewtonOutcome {
            status: NewtonStatus::Defect,
            refined: x.to_vec(),
            uniqueness_box: x.to_vec(),
            derivative_used: a,
        }
    }
}

fn assert_interior(x: Interval, x0: f64) {
    assert!(
        x.lo() < x0 && x0 < x.hi(),
        "Newton centre {x0} must lie in the interior of {x:?}"
    );
}

/// `N = x0 − [e]/[A]` from precomputed enclosures.
pub fn scalar_step(e: Interval, a: Interval, x: Interval, x0: f64) -> NewtonOutcome {
    assert_interior(x, x0);
    if a.contains_zero() || !a.is_bounded() || !e.is_bounded() {
        return NewtonOutcome::defect(&[x], vec![vec![a]]);
    }
    let n = Interval::point(x0) - e / a;
    NewtonOutcome::build(&[n], &[x], vec![vec![a]])
}

/// `N = x0 − f(x0)/f'(X)`.
///
/// # Panics
/// If `x0` is not in the interior of `x`.
pub fn newton_scalar<E>(
    f: impl FnOnce(Interval) -> Result<Interval, E>,
    df: impl FnOnce(Interval) -> Result<Interval, E>,
    x: Interval,
    x0: f64,
) -> Result<NewtonOutcome, E> {
    assert_interior(x, x0);
    let a = df(x)?;
    if a.contains_zero() {
        return Ok(NewtonOutcome::defect(&[x], vec![vec![a]]));
    }
    Ok(scalar_step(f(Interval::point(x0))?, a, x, x0))
}

/// Parameterized operator: `[e] ⊇ f(Z, x0)`, `[A] ⊇ f_x(Z × X)` and
/// `N = x0 − [e]/[A]`. When proven, the zero set in `Z × X` is the graph of
/// a smooth function `Z → N`.
///
/// # Panics
/// If `x0` is not in the interior of `x`.
pub fn newton_parameterized<E>(
    f_at_center: impl FnOnce(Interval, f64) -> Result<Interval, E>,
    f_x: impl FnOnce(Interval, Interval) -> Result<Interval, E>,
    z: Interval,
    x: Interval,
    x0: f64,
) -> Result<NewtonOutcome, E> {
    assert_interior(x, x0);
    let a = f_x(z, x)?;
    if a.contains_zero() {
        return Ok(NewtonOutcome::defect(&[x], vec![vec![a]]));
    }
    Ok(scalar_step(f_at_center(z, x0)?, a, x, x0))
}

pub type Box2 = [Interval; 2];

/// `N = x0 − [DH(X)]⁻¹ H(x0)` in two dimensions.
///
/// # Panics
/// If `x0` is not in the interior of `x`.
pub fn newton_2d<E>(
    h: impl FnOnce([f64; 2]) -> Result<Box2, E>,
    dh: impl FnOnce(&Box2) -> Result<[[Interval; 2]; 2], E>,
    x: Box2,
    x0: [f64; 2],
) -> Result<NewtonOutcome, E> {
    assert_interior(x[0], x0[0]);
    assert_interior(x[1], x0[1]);
    let a = dh(&x)?;
    let rows = a.iter().map(|r| r.to_vec()).collect();
    let Ok(inv) = mat_inverse(&IntervalMatrix(a)) else {
        return Ok(NewtonOutcome::defect(&x, rows));
    };
    let hx = h(x0)?;
    let step = inv.mul_vec(&IntervalVector(hx));
    let n = [Interval::point(x0[0]) - step[0], Interval::point(x0[1]) - step[1]];
    Ok(NewtonOutcome::build(&n, &x, rows))
}
