//! Fixed-size interval vectors and matrices.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use super::{Interval, IntervalError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalVector<const N: usize>(pub [Interval; N]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalMatrix<const R: usize, const C: usize>(pub [[Interval; C]; R]);

impl<const N: usize> IntervalVector<N> {
    pub fn zero() -> Self {
        IntervalVector([Interval::ZERO; N])
    }

    pub fn from_points(p: [f64; N]) -> Self {
        IntervalVector(p.map(Interval::point))
    }

    pub fn from_fn(f: impl FnMut(usize) -> Interval) -> Self {
        IntervalVector(std::array::from_fn(f))
    }

    pub fn mid(&self) -> [f64; N] {
        self.0.map(Interval::mid)
    }

    pub fn max_diam(&self) -> f64 {
        self.0.iter().map(|x| x.diam()).fold(0.0, f64::max)
    }

    pub fn is_bounded(&self) -> bool {
        self.0.iter().all(|x| x.is_bounded())
    }

    pub fn contains(&self, p: &[f64; N]) -> bool {
        self.0.iter().zip(p).all(|(x, &v)| x.contains(v))
    }

    pub fn subset(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.subset(*b))
    }

    pub fn subset_interior(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.subset_interior(*b))
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let mut out = [Interval::ZERO; N];
        for i in 0..N {
            out[i] = self.0[i].intersect(other.0[i])?;
        }
        Some(IntervalVector(out))
    }

    pub fn hull(&self, other: &Self) -> Self {
        let mut out = self.0;
        for i in 0..N {
            out[i] = out[i].hull(other.0[i]);
        }
        IntervalVector(out)
    }

    pub fn map(&self, f: impl Fn(Interval) -> Interval) -> Self {
        IntervalVector(self.0.map(f))
    }
}

impl<const N: usize> Default for IntervalVector<N> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const N: usize> Index<usize> for IntervalVector<N> {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.0[i]
    }
}

impl<const N: usize> IndexMut<usize> for IntervalVector<N> {
    fn index_mut(&mut self, i: usize) -> &mut Interval {
        &mut self.0[i]
    }
}

impl<const N: usize> Add for IntervalVector<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self.0;
        for i in 0..N {
            out[i] += rhs.0[i];
        }
        IntervalVector(out)
    }
}

impl<const N: usize> Sub for IntervalVector<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self.0;
        for i in 0..N {
            out[i] -= rhs.0[i];
        }
        IntervalVector(out)
    }
}

impl<const N: usize> Neg for IntervalVector<N> {
    type Output = Self;
    fn neg(self) -> Self {
        IntervalVector(self.0.map(|x| -x))
    }
}

impl<const R: usize, const C: usize> IntervalMatrix<R, C> {
    pub fn zero() -> Self {
        IntervalMatrix([[Interval::ZERO; C]; R])
    }

    pub fn from_points(p: [[f64; C]; R]) -> Self {
        IntervalMatrix(p.map(|row| row.map(Interval::point)))
    }

    pub fn mid(&self) -> [[f64; C]; R] {
        self.0.map(|row| row.map(Interval::mid))
    }

    pub fn transpose(&self) -> IntervalMatrix<C, R> {
        let mut out = IntervalMatrix::<C, R>::zero();
        for i in 0..R {
            for j in 0..C {
                out.0[j][i] = self.0[i][j];
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &IntervalVector<C>) -> IntervalVector<R> {
        let mut out = [Interval::ZERO; R];
        for (i, row) in self.0.iter().enumerate() {
            let mut acc = Interval::ZERO;
            for j in 0..C {
                acc += row[j] * v.0[j];
            }
            out[i] = acc;
        }
        IntervalVector(out)
    }

    pub fn mul_mat<const K: usize>(&self, rhs: &IntervalMatrix<C, K>) -> IntervalMatrix<R, K> {
        let mut out = IntervalMatrix::<R, K>::zero();
        for i in 0..R {
            for k in 0..K {
                let mut acc = Interval::ZERO;
                for j in 0..C {
                    acc += self.0[i][j] * rhs.0[j][k];
                }
                out.0[i][k] = acc;
            }
        }
        out
    }

    pub fn contains(&self, p: &[[f64; C]; R]) -> bool {
        (0..R).all(|i| (0..C).all(|j| self.0[i][j].contains(p[i][j])))
    }

    pub fn is_bounded(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_bounded())
    }

    pub fn max_diam(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.diam()).fold(0.0, f64::max)
    }

    pub fn hull(&self, other: &Self) -> Self {
        let mut out = self.0;
        for i in 0..R {
            for j in 0..C {
                out[i][j] = out[i][j].hull(other.0[i][j]);
            }
        }
        IntervalMatrix(out)
    }
}

impl<const N: usize> IntervalMatrix<N, N> {
    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            m.0[i][i] = Interval::ONE;
        }
        m
    }
}

impl<const R: usize, const C: usize> Index<(usize, usize)> for IntervalMatrix<R, C> {
    type Output = Interval;
    fn index(&self, (i, j): (usize, usize)) -> &Interval {
        &self.0[i][j]
    }
}

impl<const R: usize, const C: usize> IndexMut<(usize, usize)> for IntervalMatrix<R, C> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Interval {
        &mut self.0[i][j]
    }
}

impl<const R: usize, const C: usize> Add for IntervalMatrix<R, C> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self.0;
        for i in 0..R {
            for j in 0..C {
                out[i][j] += rhs.0[i][j];
            }
        }
        IntervalMatrix(out)
    }
}

impl<const R: usize, const C: usize> Sub for IntervalMatrix<R, C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self.0;
        for i in 0..R {
            for j in 0..C {
                out[i][j] -= rhs.0[i][j];
            }
        }
        IntervalMatrix(out)
    }
}

impl<const R: usize, const C: usize, const K: usize> Mul<IntervalMatrix<C, K>>
    for IntervalMatrix<R, C>
{
    type Output = IntervalMatrix<R, K>;
    fn mul(self, rhs: IntervalMatrix<C, K>) -> IntervalMatrix<R, K> {
        self.mul_mat(&rhs)
    }
}

/// Enclosure of `{M⁻¹ : M ∈ A}` for the supported small dimensions.
pub trait MatInverse: Sized {
    fn inverse(&self) -> Result<Self, IntervalError>;
}

impl MatInverse for IntervalMatrix<1, 1> {
    fn inverse(&self) -> Result<Self, IntervalError> {
        let a = self.0[0][0];
        if a.contains_zero() {
            return Err(IntervalError::SingularIntervalMatrix);
        }
        Ok(IntervalMatrix([[Interval::ONE.checked_div(a)?]]))
    }
}

impl MatInverse for IntervalMatrix<2, 2> {
    /// Adjugate over determinant, intersected with the Schur-complement
    /// form `A⁻¹₀₀ = 1/(a − bc/d)` (and its mirror) whenever that form is
    /// defined. Both are valid enclosures; the second is exact for diagonal
    /// and triangular matrices.
    fn inverse(&self) -> Result<Self, IntervalError> {
        let [[a, b], [c, d]] = self.0;
        let det = a * d - b * c;
        if det.contains_zero() || !det.is_bounded() {
            return Err(IntervalError::SingularIntervalMatrix);
        }
        let mut inv = [[d / det, -b / det], [-c / det, a / det]];
        if !a.contains_zero() && !d.contains_zero() {
            let s0 = a - b * c / d;
            let s1 = d - b * c / a;
            if !s0.contains_zero() && !s1.contains_zero() {
                let i00 = Interval::ONE / s0;
                let i11 = Interval::ONE / s1;
                let schur = [[i00, -(b / d) * i00], [-(c / a) * i11, i11]];
                for i in 0..2 {
                    for j in 0..2 {
                        if let Some(x) = inv[i][j].intersect(schur[i][j]) {
                            inv[i][j] = x;
                        }
                    }
                }
            }
        }
        let m = IntervalMatrix(inv);
        if !m.is_bounded() {
            return Err(IntervalError::Overflow);
        }
        Ok(m)
    }
}

/// `mat_inverse` for the dimensions the proofs use.
pub fn mat_inverse<M: MatInverse>(a: &M) -> Result<M, IntervalError> {
    a.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn one_by_one_inverse() {
        let m = IntervalMatrix([[iv(2.0, 2.0)]]);
        assert_eq!(mat_inverse(&m).unwrap().0[0][0], iv(0.5, 0.5));
    }

    #[test]
    fn identity_inverse() {
        let m = IntervalMatrix::<2, 2>::identity();
        assert_eq!(mat_inverse(&m).unwrap(), m);
    }

    #[test]
    fn diagonal_inverse_matches_scalar_division() {
        let d = iv(2.0, 3.0);
        let m = IntervalMatrix([[d, Interval::ZERO], [Interval::ZERO, d]]);
        let inv = mat_inverse(&m).unwrap();
        let scalar = Interval::ONE.checked_div(d).unwrap();
        assert_eq!(inv.0[0][0], scalar);
        assert_eq!(inv.0[1][1], scalar);
        assert_eq!(inv.0[0][1], Interval::ZERO);
        assert_eq!(inv.0[1][0], Interval::ZERO);
    }

    #[test]
    fn singular_is_reported() {
        let m = IntervalMatrix([[iv(1.0, 1.0), iv(1.0, 1.0)], [iv(1.0, 1.0), iv(0.5, 1.5)]]);
        assert_eq!(mat_inverse(&m), Err(IntervalError::SingularIntervalMatrix));
    }
}
