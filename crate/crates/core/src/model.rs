//! The stationary Swift–Hohenberg system in first-order form
//!
//! ```text
//! x' = y,  y' = z,  z' = w,  w' = -ξ z + x - x³      (ξ' = 0 when extended)
//! ```
//!
//! with its energy, the zero-energy section embedding, derivatives, the
//! reversing symmetry and the change of parameter `α = 1 + 4/ξ²`.

use serde::{Deserialize, Serialize};

use crate::interval::{inv_sqrt2, Interval, IntervalError, IntervalMatrix, IntervalVector};
use crate::taylor;

/// Phase-space point or box, components ordered `(x, y, z, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub x: Interval,
    pub y: Interval,
    pub z: Interval,
    pub w: Interval,
}

/// [`SystemState`] with the parameter carried as a fifth coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub state: SystemState,
    pub xi: Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub xi: Interval,
}

/// Upper end of the admissible parameter range, `√8`.
pub fn xi_max() -> Interval {
    Interval::point(8.0).sqrt().expect("sqrt(8)")
}

impl SystemState {
    pub fn new(x: Interval, y: Interval, z: Interval, w: Interval) -> Self {
        SystemState { x, y, z, w }
    }

    pub fn from_points(p: [f64; 4]) -> Self {
        Self::from_vector(&IntervalVector::from_points(p))
    }

    pub fn to_vector(&self) -> IntervalVector<4> {
        IntervalVector([self.x, self.y, self.z, self.w])
    }

    pub fn from_vector(v: &IntervalVector<4>) -> Self {
        SystemState::new(v[0], v[1], v[2], v[3])
    }

    pub fn extend(self, xi: Interval) -> ExtendedState {
        ExtendedState { state: self, xi }
    }
}

impl ExtendedState {
    pub fn to_vector(&self) -> IntervalVector<5> {
        let s = &self.state;
        IntervalVector([s.x, s.y, s.z, s.w, self.xi])
    }

    pub fn from_vector(v: &IntervalVector<5>) -> Self {
        ExtendedState {
            state: SystemState::new(v[0], v[1], v[2], v[3]),
            xi: v[4],
        }
    }

    pub fn params(&self) -> ModelParams {
        ModelParams { xi: self.xi }
    }
}

impl ModelParams {
    pub fn new(xi: Interval) -> Self {
        ModelParams { xi }
    }

    /// Checks `ξ ⊂ [0, √8]`.
    pub fn validate(&self) -> Result<(), IntervalError> {
        if self.xi.lo() >= 0.0 && self.xi.hi() <= xi_max().lo() {
            Ok(())
        } else {
            Err(IntervalError::DomainError("xi outside [0, sqrt 8]"))
        }
    }
}

fn w_dot(x: Interval, z: Interval, xi: Interval) -> Interval {
    x - xi * z - x.powi(3)
}

pub fn vector_field(s: &SystemState, p: &ModelParams) -> IntervalVector<4> {
    IntervalVector([s.y, s.z, s.w, w_dot(s.x, s.z, p.xi)])
}

pub fn extended_vector_field(s: &ExtendedState) -> IntervalVector<5> {
    let v = vector_field(&s.state, &s.params());
    IntervalVector([v[0], v[1], v[2], v[3], Interval::ZERO])
}

/// `E = w y − z²/2 + (ξ/2) y² + (x² − 1)²/4`.
pub fn energy(s: &SystemState, p: &ModelParams) -> Interval {
    let half = Interval::point(0.5);
    let q = s.x.sqr() - Interval::ONE;
    s.w * s.y - half * s.z.sqr() + half * p.xi * s.y.sqr() + q.sqr().scale(0.25)
}

/// `z = (x² − 1)/√2`, the branch of the zero-energy section used for orbits.
pub fn section_z(x: Interval) -> Interval {
    (x.sqr() - Interval::ONE) * inv_sqrt2()
}

/// The other zero-energy branch, `z = −(x² − 1)/√2`.
pub fn section_z_negative(x: Interval) -> Interval {
    -section_z(x)
}

/// Taylor coefficients `c_0 = s, c_1, …, c_order` of the solution through
/// `s`, as `(x, y, z, w)` vectors.
pub fn taylor_coefficients(s: &SystemState, p: &ModelParams, order: usize) -> Vec<IntervalVector<4>> {
    let e = s.extend(p.xi).to_vector();
    taylor::coefficients(&e.0, order)
        .into_iter()
        .map(|c| IntervalVector([c[0], c[1], c[2], c[3]]))
        .collect()
}

pub fn jacobian(s: &SystemState, p: &ModelParams) -> IntervalMatrix<4, 4> {
    let o = Interval::ZERO;
    let i = Interval::ONE;
    let a = Interval::ONE - s.x.sqr().scale(3.0);
    IntervalMatrix([[o, i, o, o], [o, o, i, o], [o, o, o, i], [a, o, -p.xi, o]])
}

/// Jacobian of the extended field; the last column is `∂/∂ξ`.
pub fn extended_jacobian(s: &ExtendedState) -> IntervalMatrix<5, 5> {
    let j = jacobian(&s.state, &s.params());
    let mut m = IntervalMatrix::<5, 5>::zero();
    for r in 0..4 {
        for c in 0..4 {
            m[(r, c)] = j[(r, c)];
        }
    }
    m[(3, 4)] = -s.state.z;
    m
}

/// Nonzero second derivatives, all in the `w'` component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianTerms {
    /// `∂²w'/∂x² = −6x`
    pub xx: Interval,
    /// `∂²w'/∂ξ∂z = −1` (extended system only)
    pub xi_z: Interval,
}

pub fn hessian_terms(s: &SystemState, _p: &ModelParams) -> HessianTerms {
    HessianTerms {
        xx: s.x.scale(-6.0),
        xi_z: -Interval::ONE,
    }
}

/// `R(x, y, z, w) = (x, −y, z, −w)`.
pub fn reverse(s: &SystemState) -> SystemState {
    SystemState::new(s.x, -s.y, s.z, -s.w)
}

/// `R` acting on extended states; `ξ` is left alone.
pub fn reverse_extended(s: &ExtendedState) -> ExtendedState {
    ExtendedState {
        state: reverse(&s.state),
        xi: s.xi,
    }
}

/// `α = 1 + 4/ξ²`.
pub fn xi_to_alpha(xi: Interval) -> Result<Interval, IntervalError> {
    if xi.lo() <= 0.0 {
        return Err(IntervalError::DomainError("xi_to_alpha"));
    }
    (Interval::ONE + Interval::point(4.0).checked_div(xi.sqr())?).bounded()
}

/// `ξ = 2/√(α − 1)`.
pub fn alpha_to_xi(alpha: Interval) -> Result<Interval, IntervalError> {
    if alpha.lo() <= 1.0 {
        return Err(IntervalError::DomainError("alpha_to_xi"));
    }
    let s = (alpha - Interval::ONE).sqrt()?;
    Interval::point(2.0).checked_div(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: f64) -> Interval {
        Interval::point(v)
    }

    fn params(xi: f64) -> ModelParams {
        ModelParams::new(pt(xi))
    }

    #[test]
    fn equilibria_and_exact_values() {
        let z = IntervalVector::<4>::zero();
        assert_eq!(vector_field(&SystemState::from_points([1.0, 0.0, 0.0, 0.0]), &params(0.7)), z);
        assert_eq!(vector_field(&SystemState::from_points([-1.0, 0.0, 0.0, 0.0]), &params(2.0)), z);
        assert_eq!(
            vector_field(&SystemState::from_points([2.0, 0.0, 0.0, 0.0]), &params(1.0)),
            IntervalVector::from_points([0.0, 0.0, 0.0, -6.0])
        );
        let e = SystemState::from_points([2.0, 0.0, 0.0, 0.0]).extend(pt(1.0));
        assert_eq!(
            extended_vector_field(&e),
            IntervalVector::from_points([0.0, 0.0, 0.0, -6.0, 0.0])
        );
        let e = SystemState::from_points([0.3, -1.0, 2.0, 5.0]).extend(pt(1.3));
        assert_eq!(extended_vector_field(&e)[4], Interval::ZERO);
    }

    #[test]
    fn energy_values() {
        for x in [1.0, -1.0] {
            let s = SystemState::from_points([x, 0.0, 0.0, 0.0]);
            assert!(energy(&s, &params(2.0)).contains(0.0));
        }
        let x = pt(-1.6);
        let s = SystemState::new(x, Interval::ZERO, section_z(x), Interval::ZERO);
        assert!(energy(&s, &params(2.0)).contains(0.0));
        let s = SystemState::from_points([0.0, 1.0, 0.0, 0.0]);
        assert!(energy(&s, &params(2.0)).contains(1.25));
    }

    #[test]
    fn section_branch() {
        assert!(section_z(pt(-1.0)).contains(0.0));
        // 1.56/√2 = 1.1030865786510141...
        let z = section_z(pt(-1.6));
        assert!(z.contains(1.103_086_578_651_014));
        assert!(z.diam() < 1e-15);
        let wide = section_z(Interval::new(-1.6, -1.5).unwrap());
        assert!(wide.contains(section_z(pt(-1.6)).mid()));
        assert!(wide.contains(section_z(pt(-1.5)).mid()));
        assert_eq!(section_z_negative(pt(-1.6)), -z);
    }

    #[test]
    fn taylor_at_equilibrium_vanishes() {
        let s = SystemState::from_points([1.0, 0.0, 0.0, 0.0]);
        let c = taylor_coefficients(&s, &params(2.0), 12);
        assert_eq!(c.len(), 13);
        for ck in &c[1..] {
            assert_eq!(*ck, IntervalVector::zero());
        }
    }

    #[test]
    fn first_taylor_coefficient_is_field() {
        let s = SystemState::from_points([0.4, -0.2, 1.1, 0.3]);
        let p = params(1.7);
        let c = taylor_coefficients(&s, &p, 3);
        let f = vector_field(&s, &p);
        for i in 0..4 {
            assert!(c[1][i].intersects(f[i]));
        }
    }

    #[test]
    fn jacobian_and_hessian() {
        let s = SystemState::from_points([1.0, 0.0, 0.0, 0.0]);
        let j = jacobian(&s, &params(2.0));
        assert_eq!(j.0[3], [pt(-2.0), pt(0.0), pt(-2.0), pt(0.0)]);
        let h = hessian_terms(&SystemState::from_points([0.0; 4]), &params(2.0));
        assert_eq!(h.xx, Interval::ZERO);
        assert_eq!(h.xi_z, pt(-1.0));
        let e = SystemState::from_points([0.5, 0.1, -0.7, 0.2]).extend(pt(1.0));
        let je = extended_jacobian(&e);
        assert_eq!(je[(3, 4)], pt(0.7));
        assert!(je.0[4].iter().all(|v| *v == Interval::ZERO));
    }

    #[test]
    fn reversal() {
        let s = SystemState::from_points([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(reverse(&s), SystemState::from_points([1.0, -2.0, 3.0, -4.0]));
        assert_eq!(reverse(&reverse(&s)), s);
        let f = SystemState::from_points([0.3, 0.0, -1.2, 0.0]);
        assert_eq!(reverse(&f), f);
    }

    #[test]
    fn alpha_conversion() {
        assert!(xi_to_alpha(xi_max()).unwrap().contains(1.5));
        assert!(xi_to_alpha(pt(2.0)).unwrap().contains(2.0));
        let xi = Interval::new(2.031_651_613_561_389_3, 2.031_651_613_581_411_6).unwrap();
        let alpha = Interval::new(1.969_084_208_010_198_9, 1.969_084_208_029_300_1).unwrap();
        assert!(xi_to_alpha(xi).unwrap().intersects(alpha));
        assert!(xi_to_alpha(pt(0.0)).is_err());
        assert!(alpha_to_xi(pt(1.0)).is_err());
        assert!(alpha_to_xi(pt(2.0)).unwrap().contains(2.0));
    }
}
