//! Reference enclosures that certified runs are compared against, and the
//! fixed inputs of the fold problem.
//!
//! Decimal literals are widened by one ulp on each side, so every interval
//! here contains the decimal interval it is written as.

use crate::interval::Interval;

/// Where the `ξ`-parameterized branches stop: `266291 · 2⁻¹⁷`.
pub const XI_SWITCH: f64 = 266291.0 / 131072.0;

/// Approximate zero of `(G, G_x)` and the radius of the box around it.
pub const FOLD_SEED: (f64, f64) = (2.0316516135713902, -1.5824941113082425);
pub const FOLD_RADIUS: f64 = 1e-10;

fn outward(lo: f64, hi: f64) -> Interval {
    Interval::new(lo.next_down(), hi.next_up()).expect("ordered reference bounds")
}

/// `x₋` at [`XI_SWITCH`].
pub fn x_lower_end() -> Interval {
    outward(-1.5825350627563035, -1.5825350627530319)
}

/// `x₊` at [`XI_SWITCH`].
pub fn x_upper_end() -> Interval {
    outward(-1.5824440318327613, -1.58244403182912)
}

pub fn xi_star() -> Interval {
    outward(2.0316516135613893, 2.0316516135814116)
}

pub fn x_star() -> Interval {
    outward(-1.5824941113301776, -1.5824941112863635)
}

pub fn alpha_star() -> Interval {
    outward(1.9690842080101989, 1.9690842080293001)
}

/// Bound on the second derivative of the fold curve over the switching
/// range.
pub fn concavity() -> Interval {
    outward(-74010.849232287583, -12744.872650106316)
}

/// The `x`-range of the second stage: from the lower end of `x₋` at
/// [`XI_SWITCH`] to the upper end of `x₊`, taking the outer of the
/// reference bounds and the computed enclosures.
pub fn switching_range(x_lower: Interval, x_upper: Interval) -> Interval {
    let lo = x_lower_end().lo().min(x_lower.lo());
    let hi = x_upper_end().hi().max(x_upper.hi());
    Interval::new(lo, hi).expect("x_lower below x_upper")
}
