//! Warm starts for the certification runs.
//!
//! Seeds are approximate solutions only; nothing downstream trusts them.
//! The checked-in `seeds.json` can be regenerated with [`regenerate`],
//! which uses the double-double shooting code and never touches the
//! interval integrator.

use serde::{Deserialize, Serialize};

use crate::continuation::{track_point, Orientation};
use crate::nonrigorous;
use crate::poincare::GFunction;
use crate::reference::XI_SWITCH;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldSeed {
    pub xi: f64,
    pub x: f64,
}

/// Approximate `x₋(ξ)` and `x₊(ξ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSeed {
    pub xi: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedFile {
    pub fold: FoldSeed,
    pub branches: Vec<BranchSeed>,
}

#[derive(Debug, thiserror::Error)]
pub enum SeedError {
    #[error("malformed seed file: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid seed: {0}")]
    Invalid(String),
    #[error("could not follow the {which} branch from {from} to {to}")]
    Lost { which: &'static str, from: f64, to: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Lower,
    Upper,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::Lower => "lower",
            Which::Upper => "upper",
        }
    }
}

const BUILTIN: &str = include_str!("../seeds.json");

impl SeedFile {
    pub fn builtin() -> SeedFile {
        parse_seed_file(BUILTIN).expect("built-in seed file is valid")
    }

    pub fn validate(&self) -> Result<(), SeedError> {
        let bad = |m: String| Err(SeedError::Invalid(m));
        let xi_ok = |xi: f64| xi.is_finite() && xi > 0.0 && xi * xi <= 8.0;
        let x_ok = |x: f64| x.is_finite() && x < -1.0;
        if !xi_ok(self.fold.xi) || !x_ok(self.fold.x) {
            return bad(format!("fold seed {:?} outside the domain", self.fold));
        }
        if self.branches.is_empty() {
            return bad("no branch seeds".into());
        }
        for b in &self.branches {
            if !xi_ok(b.xi) || !x_ok(b.lower) || !x_ok(b.upper) {
                return bad(format!("branch seed {b:?} outside the domain"));
            }
            if b.lower >= b.upper {
                return bad(format!("branch seed {b:?} has lower >= upper"));
            }
        }
        Ok(())
    }

    /// An approximate branch point at `xi`: the nearest seed, followed
    /// along the branch with point evaluations of `g` when it is not at
    /// `xi` already.
    pub fn branch_at<G: GFunction + ?Sized>(&self, g: &G, xi: f64, which: Which) -> Result<f64, SeedError> {
        let s = self
            .branches
            .iter()
            .min_by(|a, b| (a.xi - xi).abs().total_cmp(&(b.xi - xi).abs()))
            .ok_or_else(|| SeedError::Invalid("no branch seeds".into()))?;
        let u = match which {
            Which::Lower => s.lower,
            Which::Upper => s.upper,
        };
        if s.xi == xi {
            return Ok(u);
        }
        track_point(g, Orientation::ParamIsXi, (s.xi, u), xi).ok_or(SeedError::Lost {
            which: which.name(),
            from: s.xi,
            to: xi,
        })
    }
}

pub fn parse_seed_file(text: &str) -> Result<SeedFile, SeedError> {
    let s: SeedFile = serde_json::from_str(text)?;
    s.validate()?;
    Ok(s)
}

/// Follows one branch with double-double shooting from `(xi0, x0)` down to
/// each of `levels` (descending), with the same step acceptance rule as
/// the interval-based tracker.
fn follow_dd(xi0: f64, x0: f64, levels: &[f64]) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(levels.len());
    let (mut xi, mut x) = (xi0, x0);
    let p = nonrigorous::g_partials(xi0, x0)?;
    let mut slope = -p.g_xi / p.g_x;
    let mut h = 1e-6;
    for &target in levels {
        while xi > target {
            let next = (xi - h).max(target);
            let predicted = x + slope * (next - xi);
            match nonrigorous::solve_branch_point(next, predicted) {
                Some(xn) if (xn - predicted).abs() <= 0.5 * (xn - x).abs() + 1e-12 => {
                    slope = (xn - x) / (next - xi);
                    xi = next;
                    x = xn;
                    h *= 2.0;
                }
                _ => {
                    h /= 2.0;
                    if h < 1e-12 {
                        return None;
                    }
                }
            }
        }
        out.push(x);
    }
    Some(out)
}

/// Rebuilds the seed file from scratch: the fold by Newton on `(G, G_x)`,
/// then both branches from either side of the fold down to `levels`.
pub fn regenerate(levels: &[f64]) -> Result<SeedFile, SeedError> {
    let lost = |which, to| SeedError::Lost { which, from: XI_SWITCH, to };
    let (xi_f, x_f) = nonrigorous::solve_fold(2.0316, -1.5825, 12)
        .ok_or_else(|| SeedError::Invalid("fold Newton did not converge".into()))?;
    let mut levels: Vec<f64> = levels.iter().copied().filter(|&l| l < XI_SWITCH).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    // x± ≈ x_f ± c √(ξ_f − ξ) near the fold; start a little inside each branch
    let offset = 4.5e-5;
    let mut ends = [0.0; 2];
    for (k, (sign, which)) in [(-1.0, "lower"), (1.0, "upper")].into_iter().enumerate() {
        ends[k] = nonrigorous::solve_branch_point(XI_SWITCH, x_f + sign * offset).ok_or(lost(which, XI_SWITCH))?;
    }
    let bottom = levels.last().copied().unwrap_or(XI_SWITCH);
    let lower = follow_dd(XI_SWITCH, ends[0], &levels).ok_or_else(|| lost("lower", bottom))?;
    let upper = follow_dd(XI_SWITCH, ends[1], &levels).ok_or_else(|| lost("upper", bottom))?;
    let mut branches = vec![BranchSeed { xi: XI_SWITCH, lower: ends[0], upper: ends[1] }];
    for (i, &xi) in levels.iter().enumerate() {
        branches.push(BranchSeed { xi, lower: lower[i], upper: upper[i] });
    }
    let file = SeedFile { fold: FoldSeed { xi: xi_f, x: x_f }, branches };
    file.validate()?;
    Ok(file)
}
