use super::*;
use crate::continuation::{certify_branch, ContinuationConfig};
use crate::poincare::{FnG, GEvaluation, GSecond};

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn pt(v: f64) -> Interval {
    Interval::point(v)
}

/// `G = (x − m)² + ξ − c`, fold at `(c, m)`.
fn parabola(m: f64, c: f64) -> FnG<impl Fn(Interval, Interval, VarOrder) -> GEvaluation + Sync> {
    FnG(move |xi: Interval, x: Interval, order: VarOrder| {
        let d = x - pt(m);
        GEvaluation {
            value: d.sqr() + xi - pt(c),
            d_dx: (order >= VarOrder::First).then_some(d.scale(2.0)),
            d_dxi: (order >= VarOrder::First).then_some(Interval::ONE),
            d2: (order >= VarOrder::Second).then_some(GSecond { xx: pt(2.0), xxi: Interval::ZERO, xixi: Interval::ZERO }),
            extrema: vec![pt(-1.5), pt(1.3), pt(0.2)],
            crossing_times: vec![],
        }
    })
}

struct Pipeline {
    lower: CertifiedBranch,
    upper: CertifiedBranch,
    tilde: CertifiedBranch,
    fold: FoldCertificate,
}

fn pipeline() -> Pipeline {
    let (m, c) = (-1.5, 1.0);
    let g = parabola(m, c);
    let cfg = ContinuationConfig { second_order: true, ..ContinuationConfig::default() };
    let range = iv(0.2, 0.75);
    let lower = certify_branch(&g, range, m - 0.9, Orientation::ParamIsXi, &cfg).unwrap();
    let upper = certify_branch(&g, range, m + 0.9, Orientation::ParamIsXi, &cfg).unwrap();
    let xs = iv(lower.endpoints[1].lo(), upper.endpoints[1].hi());
    let tilde = certify_branch(&g, xs, 0.75, Orientation::ParamIsX, &cfg).unwrap();
    let mut fold = locate_fold(&g, (c + 1e-5, m - 1e-5), 1e-3).unwrap();
    let conc = certify_concavity(&tilde).unwrap();
    fold = certify_unique_maximum(fold, &tilde, &conc).unwrap();
    fold.glue = Some(glue_check(&lower, &upper, &tilde).unwrap());
    Pipeline { lower, upper, tilde, fold }
}

#[test]
fn quadratic_fold_is_located() {
    let g = FnG(|xi: Interval, x: Interval, order: VarOrder| GEvaluation {
        value: x.sqr() - xi,
        d_dx: (order >= VarOrder::First).then_some(x.scale(2.0)),
        d_dxi: (order >= VarOrder::First).then_some(-Interval::ONE),
        d2: (order >= VarOrder::Second).then_some(GSecond { xx: pt(2.0), xxi: Interval::ZERO, xixi: Interval::ZERO }),
        extrema: vec![],
        crossing_times: vec![],
    });
    let fc = locate_fold(&g, (0.0, 0.0), 1e-3).unwrap();
    assert!(fc.xi_star.contains(0.0) && fc.x_star.contains(0.0));
    assert!(fc.newton2d.is_proven() && fc.alpha_star.is_none());
    assert!(fc.xi_star.diam() < 1e-12 && fc.x_star.diam() < 1e-12);
    let g = parabola(-1.5, 2.0);
    let fc = locate_fold(&g, (2.0 + 1e-6, -1.5), 1e-4).unwrap();
    assert!(fc.alpha_star.unwrap().contains(2.0));
    assert_eq!(xi_to_alpha(fc.xi_star).ok(), fc.alpha_star);
}

#[test]
fn singular_fold_box_is_refused() {
    // H_ξ vanishes identically: DH is singular
    let g = FnG(|_xi: Interval, x: Interval, order: VarOrder| GEvaluation {
        value: x.sqr(),
        d_dx: (order >= VarOrder::First).then_some(x.scale(2.0)),
        d_dxi: (order >= VarOrder::First).then_some(Interval::ZERO),
        d2: (order >= VarOrder::Second).then_some(GSecond { xx: pt(2.0), xxi: Interval::ZERO, xixi: Interval::ZERO }),
        extrema: vec![],
        crossing_times: vec![],
    });
    assert!(matches!(locate_fold(&g, (1.0, 0.0), 1e-3), Err(FoldError::NotProven(NewtonStatus::Defect))));
    assert!(locate_fold(&g, (1.0, 0.0), -1.0).is_err());
}

#[test]
fn synthetic_pipeline_assembles() {
    let p = pipeline();
    let t = assemble_theorem(&p.fold, &p.lower, &p.upper, &p.tilde).unwrap();
    assert!(t.fold.xi_star.contains(1.0) && t.fold.x_star.contains(-1.5));
    assert!(t.concavity.hull.contains(-2.0));
    assert_eq!(t.glue.lower_segment, 0);
    assert_eq!(t.statements.len(), 5);
    let seg = &p.tilde.segments[p.fold.membership_segments[0]];
    assert!(seg.refined().intersects(p.fold.xi_star));
}

#[test]
fn missing_or_tampered_ingredients_are_refused() {
    let p = pipeline();
    let mut no_glue = p.fold.clone();
    no_glue.glue = None;
    assert!(matches!(assemble_theorem(&no_glue, &p.lower, &p.upper, &p.tilde), Err(FoldError::Missing("glue"))));

    let mut no_conc = p.fold.clone();
    no_conc.concavity_hull = None;
    assert!(assemble_theorem(&no_conc, &p.lower, &p.upper, &p.tilde).is_err());

    let mut gap = p.lower.clone();
    gap.segments.remove(2);
    assert!(matches!(
        assemble_theorem(&p.fold, &gap, &p.upper, &p.tilde),
        Err(FoldError::Continuation(ContinuationError::BrokenChain { .. }))
    ));

    let mut alpha = p.fold.clone();
    alpha.alpha_star = alpha.alpha_star.map(|a| a + pt(1e-9));
    assert!(assemble_theorem(&alpha, &p.lower, &p.upper, &p.tilde).is_err());

    let mut status = p.fold.clone();
    status.newton2d.status = NewtonStatus::Inconclusive;
    assert!(matches!(assemble_theorem(&status, &p.lower, &p.upper, &p.tilde), Err(FoldError::NotProven(_))));

    // swapped branches fail the separation check
    assert!(assemble_theorem(&p.fold, &p.upper, &p.lower, &p.tilde).is_err());
}

#[test]
fn fold_away_from_the_chain_is_indeterminate() {
    let p = pipeline();
    let mut far = p.fold.clone();
    far.x_star = far.x_star + pt(5.0);
    far.membership_segments.clear();
    let conc = certify_concavity(&p.tilde).unwrap();
    assert!(matches!(certify_unique_maximum(far, &p.tilde, &conc), Err(FoldError::Indeterminate(_))));
    let convex = Concavity { hull: pt(1.0), concave: false };
    assert!(certify_unique_maximum(p.fold.clone(), &p.tilde, &convex).is_err());
    assert!(certify_unique_maximum(p.fold.clone(), &p.lower, &conc).is_err());
}
