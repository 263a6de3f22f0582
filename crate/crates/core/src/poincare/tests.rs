use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::nonrigorous::{self, Gbs, DD};
use crate::odeint::extended_point;

const SEED: (f64, f64) = (2.0316516135713902, -1.5824941113082425);

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn pt(v: f64) -> Interval {
    Interval::point(v)
}

fn seed_eval(order: VarOrder) -> GEvaluation {
    eval_g(pt(SEED.0), pt(SEED.1), &cfg(), order).unwrap()
}

fn close(an: f64, fd: f64, rel: f64) -> bool {
    (an - fd).abs() <= rel * an.abs().max(fd.abs()).max(1.0)
}

#[test]
fn seed_nearly_solves_the_shooting_equation() {
    let g = seed_eval(VarOrder::First);
    assert!(g.value.intersects(Interval::symmetric(1e-6)));
    assert!(g.value.diam() < 1e-10);
    assert!(g.d_dx.unwrap().intersects(Interval::symmetric(1e-4)));
    assert!(g.d_dxi.unwrap().is_negative());
    assert_eq!(g.extrema.len(), 3);
    assert_eq!(g.crossing_times.len(), 2);
    check_geometry(&g).unwrap();
}

#[test]
fn lower_orders_leave_derivatives_out() {
    let g = seed_eval(VarOrder::None);
    assert!(g.d_dx.is_none() && g.d_dxi.is_none() && g.d2.is_none());
    let g = seed_eval(VarOrder::First);
    assert!(g.d_dx.is_some() && g.d2.is_none());
}

#[test]
fn partials_match_reference_differences() {
    let g = seed_eval(VarOrder::Second);
    let r = nonrigorous::g_partials(SEED.0, SEED.1).unwrap();
    let d2 = g.d2.unwrap();
    let pairs = [
        (g.d_dxi.unwrap(), r.g_xi),
        (d2.xx, r.g_xx),
        (d2.xxi, r.g_xxi),
        (d2.xixi, r.g_xixi),
    ];
    for (an, fd) in pairs {
        assert!(close(an.mid(), fd, 1e-3), "{an:?} vs {fd}");
    }
    // G_x vanishes to first order at the seed; compare absolutely
    assert!((g.d_dx.unwrap().mid() - r.g_x).abs() < 1e-6);
}

#[test]
fn box_evaluation_contains_point_evaluations() {
    let xi = Interval::new(SEED.0 - 1e-8, SEED.0 + 1e-8).unwrap();
    let x = Interval::new(SEED.1 - 1e-8, SEED.1 + 1e-8).unwrap();
    let b = eval_g(xi, x, &cfg(), VarOrder::Second).unwrap();
    for (a, c) in [(-1.0, -1.0), (1.0, -1.0), (0.0, 0.0), (-0.5, 1.0)] {
        let p = eval_g(pt(SEED.0 + a * 1e-8), pt(SEED.1 + c * 1e-8), &cfg(), VarOrder::Second).unwrap();
        assert!(b.value.intersects(p.value));
        assert!(b.d_dx.unwrap().intersects(p.d_dx.unwrap()));
        assert!(b.d_dxi.unwrap().intersects(p.d_dxi.unwrap()));
        assert!(b.d2.unwrap().xx.intersects(p.d2.unwrap().xx));
    }
}

#[test]
fn crossings_alternate_and_sit_on_the_section() {
    let start = embedding(pt(SEED.0), pt(SEED.1), VarOrder::None);
    let cr = poincare_map(start, VarOrder::None, 4, &cfg()).unwrap();
    let params = crate::model::ModelParams::new(pt(SEED.0));
    for (i, c) in cr.iter().enumerate() {
        assert_eq!(c.state[1], Interval::ZERO);
        assert!(c.transversal);
        let z_positive = c.state[2].is_positive();
        assert!(z_positive || c.state[2].is_negative());
        // minima and maxima of u alternate; the start is a minimum
        assert_eq!(z_positive, i % 2 == 1, "crossing {i}");
        let e = crate::model::energy(&crate::odeint::project(&c.state), &params);
        assert!(e.contains(0.0));
    }
    assert!(cr.windows(2).all(|w| w[0].crossing_time.hi() < w[1].crossing_time.lo()));
}

#[test]
fn reversibility_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let x = rng.gen_range(-1.6..-1.4);
        let z = rng.gen_range(0.2..0.9);
        let xi = rng.gen_range(1.5..2.03);
        let u = [x, 0.0, z, 0.0, xi];
        let p = &poincare_map_box(&extended_point(u), VarOrder::None, 1, &cfg()).unwrap()[0];
        let mut rv = p.state;
        rv[3] = -rv[3];
        let back = &poincare_map_box(&rv, VarOrder::None, 1, &cfg()).unwrap()[0];
        let mut r_back = back.state;
        r_back[3] = -r_back[3];
        assert!(r_back.contains(&u));
    }
}

fn reference_crossing(p: [f64; 5], delta: [f64; 5]) -> [DD; 5] {
    let start: [DD; 5] = std::array::from_fn(|i| DD::new(p[i]) + DD::new(delta[i]));
    nonrigorous::crossings(&start, 1, &Gbs::dd_default(), 20.0).unwrap()[0].state
}

#[test]
fn map_derivatives_match_finite_differences() {
    // an off-section start a little after the seed's minimum
    let seed = nonrigorous::embed(DD::new(SEED.0), DD::new(SEED.1));
    let p = Gbs::dd_default().flow(&seed, 1.0).map(|v| v.hi);
    let cr = poincare_map_box(&extended_point(p), VarOrder::Second, 1, &cfg()).unwrap();
    let dp = cr[0].derivative.clone().unwrap();
    let d2 = cr[0].second.clone().unwrap();
    let shift = |a: usize, e: f64| {
        let mut d = [0.0; 5];
        d[a] = e;
        d
    };
    let e1 = 1e-7;
    for a in 0..5 {
        let (fp, fm) = (reference_crossing(p, shift(a, e1)), reference_crossing(p, shift(a, -e1)));
        for i in 0..5 {
            let fd = (fp[i] - fm[i]).hi / (2.0 * e1);
            assert!(close(dp[a][i].mid(), fd, 1e-4), "DP[{i}][{a}] {:?} vs {fd}", dp[a][i]);
        }
    }
    let e2 = 1e-5;
    let f0 = reference_crossing(p, [0.0; 5]);
    for a in 0..5 {
        for b in a..5 {
            let fd: Vec<f64> = if a == b {
                let (fp, fm) = (reference_crossing(p, shift(a, e2)), reference_crossing(p, shift(a, -e2)));
                (0..5).map(|i| (fp[i] - f0[i] - f0[i] + fm[i]).hi / (e2 * e2)).collect()
            } else {
                let both = |sa: f64, sb: f64| {
                    let mut d = [0.0; 5];
                    d[a] = sa * e2;
                    d[b] = sb * e2;
                    reference_crossing(p, d)
                };
                let (pp, pm, mp, mm) = (both(1.0, 1.0), both(1.0, -1.0), both(-1.0, 1.0), both(-1.0, -1.0));
                (0..5).map(|i| (pp[i] - pm[i] - mp[i] + mm[i]).hi / (4.0 * e2 * e2)).collect()
            };
            let col = d2[pair_index(5, a, b)];
            for i in 0..5 {
                assert!(close(col[i].mid(), fd[i], 1e-3), "D2P[{i}][{a}{b}] {:?} vs {}", col[i], fd[i]);
            }
        }
    }
}

#[test]
fn derivatives_agree_with_differences_of_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let eps = 1e-6;
    for _ in 0..20 {
        let xi = rng.gen_range(1.6..2.03);
        let x = rng.gen_range(-1.59..-1.55);
        let g = eval_g(pt(xi), pt(x), &cfg(), VarOrder::First).unwrap();
        let value = |a: f64, b: f64| eval_g(pt(a), pt(b), &cfg(), VarOrder::None).unwrap().value.mid();
        let fx = (value(xi, x + eps) - value(xi, x - eps)) / (2.0 * eps);
        let fxi = (value(xi + eps, x) - value(xi - eps, x)) / (2.0 * eps);
        assert!(close(g.d_dx.unwrap().mid(), fx, 1e-3), "G_x at ({xi}, {x})");
        assert!(close(g.d_dxi.unwrap().mid(), fxi, 1e-3), "G_xi at ({xi}, {x})");
    }
}

#[test]
fn orbit_closes_after_four_crossings() {
    let xi = 2.0;
    let x = nonrigorous::solve_branch_point(xi, -1.58).unwrap();
    let xb = Interval::new(x - 1e-12, x + 1e-12).unwrap();
    let g = eval_g(pt(xi), xb, &cfg(), VarOrder::None).unwrap();
    assert!(g.value.contains(0.0));
    let start = embedding(pt(xi), xb, VarOrder::None);
    let s0 = start.set.hull();
    let cr = poincare_map(start, VarOrder::None, 4, &cfg()).unwrap();
    let s4 = cr[3].state;
    assert!((0..5).all(|i| s4[i].intersects(s0[i])));
}

#[test]
fn geometry_examples() {
    let iv = |a: f64, b: f64| Interval::new(a, b).unwrap();
    let ok = [iv(-1.6, -1.58), iv(1.2, 1.3), iv(-0.5, 0.5)];
    assert!(check_extrema(&ok).is_ok());
    let straddle = [iv(-1.6, -1.58), iv(1.2, 1.3), iv(0.9, 1.1)];
    assert!(matches!(check_extrema(&straddle), Err(GeometryError::Indeterminate { index: 2, .. })));
    let wrong = [iv(-1.6, -1.58), iv(0.2, 0.3), iv(-0.5, 0.5)];
    assert!(matches!(check_extrema(&wrong), Err(GeometryError::Violated { index: 1, .. })));
    assert!(matches!(check_extrema(&ok[..2]), Err(GeometryError::Missing(2))));
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(eval_g(pt(2.0), pt(-0.5), &cfg(), VarOrder::None), Err(PoincareError::InvalidInput(_))));
    assert!(matches!(eval_g(pt(3.0), pt(-1.5), &cfg(), VarOrder::None), Err(PoincareError::InvalidInput(_))));
    let mut b = extended_point([-1.5, 0.0, 0.5, 0.0, 2.0]);
    b[1] = Interval::symmetric(1e-3);
    assert!(matches!(poincare_map_box(&b, VarOrder::None, 1, &cfg()), Err(PoincareError::InvalidInput(_))));
    let p = extended_point([-1.5, 0.0, 0.5, 0.0, 2.0]);
    assert!(poincare_map_box(&p, VarOrder::None, 0, &cfg()).is_err());
}

#[test]
fn equilibrium_never_crosses() {
    let p = extended_point([1.0, 0.0, 0.0, 0.0, 2.0]);
    let e = poincare_map_box(&p, VarOrder::None, 1, &cfg()).unwrap_err();
    assert!(matches!(e, PoincareError::NonTransversalCrossing { .. } | PoincareError::LostEnclosure { .. }));
}

#[test]
fn crossing_csv_has_a_row_per_crossing() {
    let cr = poincare_map(embedding(pt(SEED.0), pt(SEED.1), VarOrder::None), VarOrder::None, 3, &cfg()).unwrap();
    let mut buf = Vec::new();
    write_crossings_csv(&cr, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("index,t_lo"));
}
