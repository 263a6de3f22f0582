//! The fold: a zero of `H = (G, G_x)`, its identification with the maximum
//! of the `x`-parameterized curve, and the assembled result.

use serde::{Deserialize, Serialize};

use crate::continuation::{
    certify_concavity, glue_check, validate_chain, verify_separation, CertifiedBranch, Concavity, ContinuationError,
    Glue, Orientation, Separation,
};
use crate::interval::{Interval, IntervalError};
use crate::model::xi_to_alpha;
use crate::newton::{newton_2d, NewtonOutcome, NewtonStatus};
use crate::odeint::VarOrder;
use crate::poincare::{GFunction, PoincareError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldCertificate {
    pub seed: [f64; 2],
    pub radius: f64,
    pub xi_star: Interval,
    pub x_star: Interval,
    /// `1 + 4/ξ*²`; absent when `ξ*` may vanish.
    pub alpha_star: Option<Interval>,
    /// The step on the seed box; it carries the uniqueness claim.
    pub newton2d: NewtonOutcome,
    /// Segments of the `x`-parameterized chain whose boxes hold the fold.
    pub membership_segments: Vec<usize>,
    pub concavity_hull: Option<Interval>,
    pub glue: Option<Glue>,
}

#[derive(Debug, thiserror::Error)]
pub enum FoldError {
    #[error("fold Newton step is {0:?}")]
    NotProven(NewtonStatus),
    #[error(transparent)]
    Evaluation(#[from] PoincareError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Continuation(#[from] ContinuationError),
    #[error("indeterminate: {0}")]
    Indeterminate(String),
    #[error("missing ingredient: {0}")]
    Missing(&'static str),
}

/// Runs the two-dimensional Newton step on `seed + [−r, r]²` for
/// `H(ξ, x) = (G, G_x)`.
pub fn locate_fold<G: GFunction + ?Sized>(g: &G, seed: (f64, f64), radius: f64) -> Result<FoldCertificate, FoldError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(FoldError::Indeterminate(format!("radius {radius} must be positive")));
    }
    let (xi0, x0) = seed;
    let bx = [Interval::new(xi0 - radius, xi0 + radius)?, Interval::new(x0 - radius, x0 + radius)?];
    let out = fold_step(g, bx)?;
    if !out.is_proven() {
        return Err(FoldError::NotProven(out.status));
    }
    // further steps on sub-boxes only sharpen: the zero in them is the
    // unique one in the seed box
    let mut best = [out.refined[0], out.refined[1]];
    for _ in 0..3 {
        let sub = best.map(|r| r.inflate(2.0, f64::MIN_POSITIVE));
        let (Some(a), Some(b)) = (sub[0].intersect(bx[0]), sub[1].intersect(bx[1])) else { break };
        let Ok(next) = fold_step(g, [a, b]) else { break };
        if !next.is_proven() {
            break;
        }
        let (Some(p), Some(q)) = (next.refined[0].intersect(best[0]), next.refined[1].intersect(best[1])) else {
            break;
        };
        if p.diam() >= best[0].diam() && q.diam() >= best[1].diam() {
            break;
        }
        best = [p, q];
    }
    let [xi_star, x_star] = best;
    Ok(FoldCertificate {
        seed: [xi0, x0],
        radius,
        xi_star,
        x_star,
        alpha_star: xi_to_alpha(xi_star).ok(),
        newton2d: out,
        membership_segments: Vec::new(),
        concavity_hull: None,
        glue: None,
    })
}

fn fold_step<G: GFunction + ?Sized>(g: &G, bx: [Interval; 2]) -> Result<NewtonOutcome, FoldError> {
    let centre = [bx[0].mid(), bx[1].mid()];
    newton_2d(
        |p| {
            let e = g.eval(Interval::point(p[0]), Interval::point(p[1]), VarOrder::First)?;
            Ok::<_, FoldError>([e.value, e.d_dx.ok_or(FoldError::Missing("G_x"))?])
        },
        |b| {
            let e = g.eval(b[0], b[1], VarOrder::Second)?;
            let d2 = e.d2.ok_or(FoldError::Missing("second partials"))?;
            let (gxi, gx) = (e.d_dxi.ok_or(FoldError::Missing("G_xi"))?, e.d_dx.ok_or(FoldError::Missing("G_x"))?);
            Ok([[gxi, gx], [d2.xxi, d2.xx]])
        },
        bx,
        centre,
    )
}

/// Segments of `tilde` whose boxes together hold `(ξ*, x*)`: their
/// parameter boxes cover `x_star` and each solution box contains `xi_star`.
fn membership(fc: &FoldCertificate, tilde: &CertifiedBranch) -> Option<Vec<usize>> {
    let hits: Vec<usize> = (0..tilde.segments.len())
        .filter(|&i| tilde.segments[i].param_box.intersects(fc.x_star))
        .collect();
    let (&first, &last) = (hits.first()?, hits.last()?);
    let covered = tilde.segments[first].param_box.lo() <= fc.x_star.lo()
        && fc.x_star.hi() <= tilde.segments[last].param_box.hi();
    let inside = hits.iter().all(|&i| fc.xi_star.subset(tilde.segments[i].solution_box));
    (covered && inside).then_some(hits)
}

/// Places the fold on the `x`-parameterized chain and attaches the
/// concavity bound. Uniqueness in the witnessing box gives `ξ* = ξ̃(x*)`;
/// `G_x(ξ*, x*) = 0` gives `ξ̃′(x*) = 0`; with `ξ̃″ < 0` the maximum is
/// unique.
pub fn certify_unique_maximum(
    mut fc: FoldCertificate,
    tilde: &CertifiedBranch,
    concavity: &Concavity,
) -> Result<FoldCertificate, FoldError> {
    if tilde.orientation != Orientation::ParamIsX {
        return Err(FoldError::Indeterminate("the fold curve must be x-parameterized".into()));
    }
    if !concavity.concave {
        return Err(FoldError::Indeterminate(format!("concavity hull {:?} is not negative", concavity.hull)));
    }
    let hits = membership(&fc, tilde)
        .ok_or_else(|| FoldError::Indeterminate("the fold box lies in no segment of the chain".into()))?;
    fc.membership_segments = hits;
    fc.concavity_hull = Some(concavity.hull);
    Ok(fc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub orientation: Orientation,
    pub range: Interval,
    pub segments: usize,
    pub endpoints: [Interval; 2],
}

impl From<&CertifiedBranch> for BranchSummary {
    fn from(b: &CertifiedBranch) -> Self {
        BranchSummary { orientation: b.orientation, range: b.range, segments: b.segments.len(), endpoints: b.endpoints }
    }
}

/// Everything established, with the enclosures it rests on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem {
    pub lower: BranchSummary,
    pub upper: BranchSummary,
    pub fold_curve: BranchSummary,
    pub separation: Separation,
    pub glue: Glue,
    pub concavity: Concavity,
    pub fold: FoldCertificate,
    pub statements: Vec<String>,
}

/// Re-checks every ingredient and assembles the result; refuses if any
/// piece is missing or inconsistent.
pub fn assemble_theorem(
    fc: &FoldCertificate,
    lower: &CertifiedBranch,
    upper: &CertifiedBranch,
    tilde: &CertifiedBranch,
) -> Result<Theorem, FoldError> {
    if fc.newton2d.status != NewtonStatus::Proven {
        return Err(FoldError::NotProven(fc.newton2d.status));
    }
    let glue_flag = fc.glue.as_ref().ok_or(FoldError::Missing("glue"))?;
    let hull = fc.concavity_hull.ok_or(FoldError::Missing("concavity"))?;
    if fc.membership_segments.is_empty() {
        return Err(FoldError::Missing("fold membership"));
    }
    if fc.alpha_star != Some(xi_to_alpha(fc.xi_star)?) {
        return Err(FoldError::Indeterminate("alpha_star does not match xi_star".into()));
    }
    for b in [lower, upper, tilde] {
        validate_chain(b)?;
    }
    let separation = verify_separation(lower, upper)?;
    let glue = glue_check(lower, upper, tilde)?;
    if &glue != glue_flag {
        return Err(FoldError::Indeterminate("recorded glue does not match the chains".into()));
    }
    let concavity = certify_concavity(tilde)?;
    if !concavity.concave || concavity.hull != hull {
        return Err(FoldError::Indeterminate("concavity does not match the chain".into()));
    }
    if membership(fc, tilde).as_ref() != Some(&fc.membership_segments) {
        return Err(FoldError::Indeterminate("fold membership does not match the chain".into()));
    }
    let (xl, xu) = (lower.endpoints[1], upper.endpoints[1]);
    if !(xl.certainly_lt(fc.x_star) && fc.x_star.certainly_lt(xu)) {
        return Err(FoldError::Indeterminate("the fold does not sit between the branch ends".into()));
    }
    let (a, e) = (lower.range.lo(), lower.range.hi());
    let statements = vec![
        format!("x_lower and x_upper are smooth on [{a}, {e}] with x_lower < x_upper"),
        format!("their graphs join at xi = {e} to the graph of xi_tilde on {:?}", tilde.range),
        format!("xi_tilde is concave with unique maximum xi_star in {:?} at x_star in {:?}", fc.xi_star, fc.x_star),
        format!("alpha_star = 1 + 4/xi_star^2 lies in {:?}", xi_to_alpha(fc.xi_star)?),
        "the extrema ordering x0 < -1 < x2 < 1 < x1 holds on every segment box".into(),
    ];
    Ok(Theorem {
        lower: lower.into(),
        upper: upper.into(),
        fold_curve: tilde.into(),
        separation,
        glue,
        concavity,
        fold: fc.clone(),
        statements,
    })
}

#[cfg(test)]
mod tests;
